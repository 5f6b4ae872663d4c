#pragma once

#include <cstring>
#include <string>
#include <utility>
#include <vector>

#include "phz/io.hpp"
#include "phz/nn/tensor.hpp"

namespace phz::nn {

/// Writes named tensors: magic "PFT1", u32-le tensor count, then per tensor
/// u32-le name length, name bytes, u32-le rank, u32-le dims, f64-le data.
inline void save_checkpoint(const std::string& path,
                            const std::vector<std::pair<std::string, const Tensor*>>& tensors) {
  std::string out;
  out.append("PFT1", 4);
  io::detail::put_u32_le(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    io::detail::put_u32_le(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    io::detail::put_u32_le(out, static_cast<std::uint32_t>(t->shape.size()));
    for (std::size_t d : t->shape) io::detail::put_u32_le(out, static_cast<std::uint32_t>(d));
    for (double v : t->data) io::detail::put_f64_le(out, v);
  }
  io::write_text(path, out);
}

inline std::vector<std::pair<std::string, Tensor>> load_checkpoint(const std::string& path) {
  std::string bytes = io::read_text(path);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "PFT1", 4) != 0)
    throw io::io_error(io::io_error::code::bad_magic, "checkpoint: bad magic");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  std::size_t pos = 4;
  auto need = [&](std::size_t n) {
    if (pos + n > bytes.size())
      throw io::io_error(io::io_error::code::truncated, "checkpoint: truncated");
  };
  need(4);
  std::uint32_t count = io::detail::get_u32_le(p + pos);
  pos += 4;
  std::vector<std::pair<std::string, Tensor>> out;
  out.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    need(4);
    std::uint32_t name_len = io::detail::get_u32_le(p + pos);
    pos += 4;
    need(name_len);
    std::string name(bytes.data() + pos, name_len);
    pos += name_len;
    need(4);
    std::uint32_t rank = io::detail::get_u32_le(p + pos);
    pos += 4;
    if (rank == 0 || rank > 8)
      throw io::io_error(io::io_error::code::bad_dims, "checkpoint: bad rank");
    std::vector<std::size_t> shape(rank);
    need(4 * rank);
    for (std::uint32_t d = 0; d < rank; ++d) {
      shape[d] = io::detail::get_u32_le(p + pos);
      pos += 4;
      if (shape[d] == 0) throw io::io_error(io::io_error::code::bad_dims, "checkpoint: zero dim");
    }
    Tensor t = Tensor::zeros(shape);
    need(8 * t.numel());
    for (std::size_t i = 0; i < t.numel(); ++i) {
      t.data[i] = io::detail::get_f64_le(p + pos);
      pos += 8;
    }
    out.emplace_back(std::move(name), std::move(t));
  }
  if (pos != bytes.size())
    throw io::io_error(io::io_error::code::trailing, "checkpoint: trailing bytes");
  return out;
}

}  // namespace phz::nn
