// phz: 2D phase unwrapping toolkit.
//
// Subcommands:
//   simulate  - synthetic wrapped-phase scenarios (grids + manifest)
//   unwrap    - run one unwrapper on a wrapped grid
//   evaluate  - score an estimate against ground truth, append a CSV row
//   bench     - sweep scenarios x methods x seeds from a config file
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

#include "phz/baselines.hpp"
#include "phz/core.hpp"
#include "phz/datagen.hpp"
#include "phz/grid.hpp"
#include "phz/io.hpp"
#include "phz/metrics.hpp"
#include "phz/pudip.hpp"

namespace fs = std::filesystem;
using phz::Grid2D;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

int worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PHZ_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1 && v <= 256) return static_cast<int>(v);
  }
  return static_cast<int>(hw);
}

void require_wrapped(const Grid2D& psi) {
  for (double v : psi.data)
    if (!(v >= -phz::kPi && v < phz::kPi))
      throw std::invalid_argument("input grid is not wrapped phase (values outside [-pi, pi))");
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw phz::io::io_error(phz::io::io_error::code::io_failure, "cannot create: " + dir);
}

// ---------------------------------------------------------------------------
// unwrap dispatch

struct UnwrapParams {
  std::string method = "ls";
  std::uint64_t seed = 0;
  phz::pudip::GeneratorConfig gcfg;
  phz::pudip::TrainConfig tcfg;
  phz::baselines::IrlsConfig irls;
};

UnwrapParams desk_profile() {
  UnwrapParams p;
  p.gcfg.stages = 3;
  p.gcfg.body_channels = 32;
  p.gcfg.skip_channels = 4;
  p.gcfg.input_channels = 32;
  p.tcfg.iterations = 600;
  p.tcfg.refresh_every = 100;
  p.tcfg.weight_bounds = phz::WeightBounds(0.1, 10.0);
  p.tcfg.lr = 0.01;
  return p;
}

UnwrapParams paper_profile() {
  UnwrapParams p;
  p.gcfg.stages = 5;
  p.gcfg.body_channels = 128;
  p.gcfg.skip_channels = 4;
  p.gcfg.input_channels = 32;
  p.tcfg.iterations = 1000;
  p.tcfg.refresh_every = 100;
  p.tcfg.weight_bounds = phz::WeightBounds(0.1, 8.0);
  p.tcfg.lr = 0.01;
  return p;
}

Grid2D run_unwrap(const Grid2D& psi, const UnwrapParams& p,
                  phz::pudip::RunReport* report = nullptr) {
  if (p.method == "itoh") return phz::baselines::unwrap_itoh(psi);
  if (p.method == "ls") return phz::baselines::unwrap_ls_dct(psi);
  if (p.method == "goldstein") return phz::baselines::unwrap_goldstein(psi);
  if (p.method == "irls") {
    phz::baselines::IrlsConfig cfg = p.irls;
    cfg.bounds = p.tcfg.weight_bounds;
    return phz::baselines::unwrap_irls(psi, cfg);
  }
  if (p.method == "pudip") {
    phz::pudip::TrainConfig t = p.tcfg;
    t.seed = p.seed;
    auto [phi, rep] = phz::pudip::unwrap_pudip(psi, p.gcfg, t);
    if (report) *report = std::move(rep);
    return phi;
  }
  throw CLI::ValidationError("--method", "unknown method: " + p.method);
}

// ---------------------------------------------------------------------------
// generator dispatch (shared by simulate and bench)

struct GenParams {
  std::string generator = "sample-b";
  std::size_t size = 256;
  std::uint64_t seed = 0;
  phz::datagen::EllipseSpec ellipse;
  double max_value = 12.0;
  double sigma_c = 0.45;
  phz::datagen::RandomSurfaceSpec surface;
  double snr_db = 15.7;
  std::size_t count = 4;
  phz::datagen::PhantomSpec phantom;
};

struct GenResult {
  Grid2D truth;
  Grid2D wrapped;
  std::optional<Grid2D> counts;
};

GenResult run_generator(const GenParams& p) {
  GenResult r;
  if (p.generator == "sample-b") {
    auto [t, w] = phz::datagen::gen_sample_b(p.ellipse, p.size, p.size);
    r.truth = std::move(t);
    r.wrapped = std::move(w);
  } else if (p.generator == "sample-c") {
    auto [t, w] = phz::datagen::gen_sample_c(p.max_value, p.sigma_c, p.size, p.size);
    r.truth = std::move(t);
    r.wrapped = std::move(w);
  } else if (p.generator == "sample-d") {
    phz::datagen::RandomSurfaceSpec spec = p.surface;
    spec.target_size = p.size;
    auto [t, w] = phz::datagen::gen_sample_d(spec, p.seed);
    r.truth = std::move(t);
    r.wrapped = std::move(w);
  } else if (p.generator == "sample-e") {
    auto [t, w] = phz::datagen::gen_sample_e(p.ellipse, p.snr_db, p.seed, p.size, p.size);
    r.truth = std::move(t);
    r.wrapped = std::move(w);
  } else if (p.generator == "phantom") {
    r.truth = phz::datagen::straight_ray_phase(p.phantom, p.size, p.size);
    r.wrapped = phz::wrap_grid(r.truth);
  } else {
    throw CLI::ValidationError("generator", "unknown generator: " + p.generator);
  }
  return r;
}

// ---------------------------------------------------------------------------
// scenario files: flat key=value

std::map<std::string, std::string> parse_scenario(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    std::size_t b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw phz::io::io_error(phz::io::io_error::code::parse,
                              "scenario line " + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty())
      throw phz::io::io_error(phz::io::io_error::code::parse,
                              "scenario line " + std::to_string(lineno) + ": empty key");
    kv[key] = val;
  }
  return kv;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t comma = s.find(',', start);
    std::string item = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    std::size_t a = item.find_first_not_of(" \t");
    std::size_t b = item.find_last_not_of(" \t");
    if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw phz::io::io_error(phz::io::io_error::code::parse, "scenario: bad number for " + what);
  }
}

// ---------------------------------------------------------------------------
// CSV helpers

std::string metrics_csv_header() { return "scenario,method,rsnr_db,ssim,rewrap_error,seed,wall_ms\n"; }

std::string format_rsnr(const phz::metrics::Rsnr& r) {
  return r.infinite ? "inf" : phz::io::format_double(r.value_db);
}

std::string metrics_csv_row(const std::string& scenario, const std::string& method,
                            const phz::metrics::Rsnr& rsnr, double ssim, double rewrap,
                            std::uint64_t seed, double wall_ms) {
  std::string row = scenario + "," + method + "," + format_rsnr(rsnr) + "," +
                    phz::io::format_double(ssim) + "," + phz::io::format_double(rewrap) + "," +
                    std::to_string(seed) + "," + phz::io::format_double(wall_ms) + "\n";
  return row;
}

// ---------------------------------------------------------------------------
// simulate

int cmd_simulate(const GenParams& p, const std::string& out_dir) {
  ensure_out_dir(out_dir);
  std::string manifest;
  if (p.generator == "phasenet-data") {
    auto tuples = phz::datagen::gen_phasenet_dataset(p.count, p.seed, p.size);
    for (std::size_t i = 0; i < tuples.size(); ++i) {
      const auto& t = tuples[i];
      std::string stem = "phasenet_" + std::to_string(i);
      std::string truth_path = stem + "_truth.phz";
      std::string wrapped_path = stem + "_wrapped.phz";
      std::string counts_path = stem + "_counts.phz";
      phz::io::write_grid(join_path(out_dir, truth_path), t.truth);
      phz::io::write_grid(join_path(out_dir, wrapped_path), t.wrapped);
      phz::io::write_grid(join_path(out_dir, counts_path), t.wrap_count);
      manifest += std::to_string(i) + "," + std::to_string(t.seed) + "," +
                  phz::io::format_double(t.scale) + "," + std::to_string(t.matrix_size) + "," +
                  truth_path + "," + wrapped_path + "," + counts_path + "\n";
    }
  } else {
    GenResult r = run_generator(p);
    phz::io::write_grid(join_path(out_dir, "truth.phz"), r.truth);
    phz::io::write_grid(join_path(out_dir, "wrapped.phz"), r.wrapped);
    std::string scale = "-";
    std::string msize = "-";
    if (p.generator == "sample-d") {
      scale = phz::io::format_double(p.surface.scale);
      msize = std::to_string(p.surface.matrix_size);
    }
    manifest += "0," + std::to_string(p.seed) + "," + scale + "," + msize +
                ",truth.phz,wrapped.phz\n";
  }
  phz::io::write_text(join_path(out_dir, "manifest.txt"), manifest);
  std::cout << "wrote " << out_dir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// unwrap

int cmd_unwrap(const std::string& in_path, const UnwrapParams& p, const std::string& out_dir) {
  Grid2D psi = phz::io::read_grid(in_path);
  require_wrapped(psi);
  ensure_out_dir(out_dir);
  auto t0 = std::chrono::steady_clock::now();
  phz::pudip::RunReport report;
  Grid2D phi = run_unwrap(psi, p, &report);
  double wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  phz::io::write_grid(join_path(out_dir, "unwrapped.phz"), phi);
  if (p.method == "pudip")
    phz::io::write_text(join_path(out_dir, "loss_log.txt"), phz::pudip::format_loss_log(report));
  std::cout << "method=" << p.method << " wall_ms=" << wall_ms << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

int cmd_evaluate(const std::string& est_path, const std::string& truth_path,
                 const std::string& psi_path, const std::string& scenario,
                 const std::string& method, std::uint64_t seed, double wall_ms,
                 const std::string& out_dir) {
  Grid2D est = phz::io::read_grid(est_path);
  Grid2D truth = phz::io::read_grid(truth_path);
  Grid2D psi = phz::io::read_grid(psi_path);
  auto rs = phz::metrics::rsnr(est, truth);
  double ss = phz::metrics::ssim(est, truth);
  double rw = phz::metrics::rewrap_error(est, psi);
  ensure_out_dir(out_dir);
  std::string path = join_path(out_dir, "metrics.csv");
  std::string row = metrics_csv_row(scenario, method, rs, ss, rw, seed, wall_ms);
  if (!fs::exists(path)) {
    phz::io::write_text(path, metrics_csv_header() + row);
  } else {
    phz::io::write_text(path, phz::io::read_text(path) + row);
  }
  std::cout << row;
  return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchCell {
  std::string value;
  std::string method;
  std::uint64_t seed = 0;
};

struct BenchResult {
  bool ok = false;
  std::string error;
  phz::metrics::Rsnr rsnr;
  double raw_db = 0.0;
  double ssim = 0.0;
  double rewrap = 0.0;
  double wall_ms = 0.0;
};

int cmd_bench(const std::string& scenario_path, const std::string& out_dir, bool strict) {
  auto kv = parse_scenario(phz::io::read_text(scenario_path));
  auto get = [&](const std::string& key, const std::string& fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
  };
  const std::string name = get("name", "scenario");
  const std::string generator = get("generator", "sample-b");
  const std::string sweep = get("sweep", "crop");
  const auto size = static_cast<std::size_t>(parse_double(get("size", "64"), "size"));
  auto values = split_list(get("values", "0"));
  auto methods = split_list(get("methods", "ls"));
  auto seed_strs = split_list(get("seeds", "1"));
  if (values.empty() || methods.empty() || seed_strs.empty())
    throw phz::io::io_error(phz::io::io_error::code::parse, "scenario: empty sweep lists");
  std::vector<std::uint64_t> seeds;
  for (const auto& s : seed_strs)
    seeds.push_back(static_cast<std::uint64_t>(parse_double(s, "seeds")));

  GenParams base;
  base.generator = generator;
  base.size = size;
  base.ellipse.radius_y = parse_double(get("radius_y", "40"), "radius_y");
  base.ellipse.radius_x = parse_double(get("radius_x", "55"), "radius_x");
  base.ellipse.amplitude = parse_double(get("amplitude", "15"), "amplitude");
  base.ellipse.sigma = parse_double(get("sigma", "0.45"), "sigma");
  base.ellipse.crop_angle = parse_double(get("crop", "0"), "crop");
  base.max_value = parse_double(get("max_value", "12"), "max_value");
  base.sigma_c = parse_double(get("sigma", "0.45"), "sigma");
  base.surface.matrix_size = static_cast<int>(parse_double(get("matrix_size", "5"), "matrix_size"));
  base.surface.scale = parse_double(get("scale", "15"), "scale");
  base.surface.dist = get("dist", "uniform") == "gaussian"
                          ? phz::datagen::SurfaceDist::GaussianShifted
                          : phz::datagen::SurfaceDist::Uniform01;
  base.snr_db = parse_double(get("snr", "inf"), "snr");

  UnwrapParams up = desk_profile();
  if (get("profile", "desk") == "paper") up = paper_profile();
  up.tcfg.iterations = static_cast<int>(parse_double(get("iters", std::to_string(up.tcfg.iterations)), "iters"));
  up.tcfg.refresh_every = std::min(
      up.tcfg.iterations,
      static_cast<int>(parse_double(get("refresh", std::to_string(up.tcfg.refresh_every)), "refresh")));
  up.tcfg.weight_bounds = phz::WeightBounds(
      parse_double(get("eps_min", phz::io::format_double(up.tcfg.weight_bounds.eps_min)), "eps_min"),
      parse_double(get("eps_max", phz::io::format_double(up.tcfg.weight_bounds.eps_max)), "eps_max"));
  up.gcfg.stages = static_cast<int>(parse_double(get("stages", std::to_string(up.gcfg.stages)), "stages"));
  up.gcfg.body_channels =
      static_cast<int>(parse_double(get("body_channels", std::to_string(up.gcfg.body_channels)), "body_channels"));
  up.gcfg.skip_channels =
      static_cast<int>(parse_double(get("skip_channels", std::to_string(up.gcfg.skip_channels)), "skip_channels"));
  up.gcfg.input_channels =
      static_cast<int>(parse_double(get("input_channels", std::to_string(up.gcfg.input_channels)), "input_channels"));

  ensure_out_dir(out_dir);

  // One cell per (value, method, seed); inputs regenerated per cell so cells
  // stay independent across worker threads.
  std::vector<BenchCell> cells;
  for (const auto& v : values)
    for (const auto& m : methods)
      for (std::uint64_t s : seeds) cells.push_back({v, m, s});
  std::vector<BenchResult> results(cells.size());

  auto run_cell = [&](std::size_t idx) {
    const BenchCell& cell = cells[idx];
    BenchResult& res = results[idx];
    try {
      GenParams gp = base;
      gp.seed = cell.seed;
      double value = parse_double(cell.value, "sweep value");
      if (sweep == "crop") gp.ellipse.crop_angle = value;
      else if (sweep == "max") gp.max_value = value;
      else if (sweep == "matrix") gp.surface.matrix_size = static_cast<int>(value);
      else if (sweep == "snr") gp.snr_db = value;
      else if (sweep == "scale") gp.surface.scale = value;
      else throw phz::io::io_error(phz::io::io_error::code::parse, "scenario: unknown sweep " + sweep);
      GenResult data = run_generator(gp);
      UnwrapParams u = up;
      u.method = cell.method;
      u.seed = cell.seed;
      auto t0 = std::chrono::steady_clock::now();
      Grid2D est = run_unwrap(data.wrapped, u);
      res.wall_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      res.rsnr = phz::metrics::rsnr(est, data.truth);
      res.raw_db = res.rsnr.raw_db;
      res.ssim = phz::metrics::ssim(est, data.truth);
      res.rewrap = phz::metrics::rewrap_error(est, data.wrapped);
      res.ok = true;
      phz::io::write_grid(join_path(out_dir, name + "_" + cell.value + "_" + cell.method + "_s" +
                                                 std::to_string(cell.seed) + "_est.phz"),
                          est);
    } catch (const std::exception& e) {
      res.ok = false;
      res.error = e.what();
    }
  };

  const int workers = std::min<int>(worker_count(), static_cast<int>(cells.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t)
      pool.emplace_back([&] {
        while (true) {
          std::size_t i = next.fetch_add(1);
          if (i >= cells.size()) return;
          run_cell(i);
        }
      });
    for (auto& th : pool) th.join();
  }

  // Aggregate rows per (value, method), in scenario order.
  std::string csv =
      "name,generator,sweep,value,method,n_seeds,rsnr_mean_db,rsnr_per_seed_db,ssim_mean,"
      "rewrap_error_max,wall_ms_total,status\n";
  bool any_error = false;
  for (const auto& v : values) {
    for (const auto& m : methods) {
      double rsnr_sum = 0.0, ssim_sum = 0.0, rewrap_max = 0.0, wall = 0.0;
      std::string per_seed;
      bool ok = true;
      std::size_t n = 0;
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].value != v || cells[i].method != m) continue;
        const BenchResult& r = results[i];
        if (!per_seed.empty()) per_seed += ";";
        if (!r.ok) {
          ok = false;
          per_seed += "error";
          continue;
        }
        per_seed += format_rsnr(r.rsnr);
        rsnr_sum += r.raw_db;
        ssim_sum += r.ssim;
        rewrap_max = std::max(rewrap_max, r.rewrap);
        wall += r.wall_ms;
        ++n;
      }
      any_error = any_error || !ok;
      std::string mean_rsnr = "error", mean_ssim = "error";
      if (ok && n > 0) {
        double mean_raw = rsnr_sum / static_cast<double>(n);
        mean_rsnr = mean_raw > 100.0 ? "inf" : phz::io::format_double(mean_raw);
        mean_ssim = phz::io::format_double(ssim_sum / static_cast<double>(n));
      }
      csv += name + "," + generator + "," + sweep + "," + v + "," + m + "," + std::to_string(n) +
             "," + mean_rsnr + "," + per_seed + "," + mean_ssim + "," +
             (ok && n > 0 ? phz::io::format_double(rewrap_max) : "error") + "," +
             phz::io::format_double(wall) + "," + (ok ? "ok" : "error") + "\n";
    }
  }
  phz::io::write_text(join_path(out_dir, "bench.csv"), csv);
  std::cout << csv;
  if (strict && any_error) return kExitNumerical;
  return 0;
}

std::vector<phz::datagen::Ellipsoid> parse_ellipsoids(const std::vector<std::string>& raw) {
  std::vector<phz::datagen::Ellipsoid> out;
  for (const auto& s : raw) {
    auto parts = split_list(s);
    if (parts.size() != 7)
      throw CLI::ValidationError("--ellipsoid", "expected cx,cy,cz,ax,ay,az,n");
    phz::datagen::Ellipsoid e;
    for (int k = 0; k < 3; ++k) e.center[static_cast<std::size_t>(k)] = parse_double(parts[static_cast<std::size_t>(k)], "ellipsoid");
    for (int k = 0; k < 3; ++k) e.semi_axes[static_cast<std::size_t>(k)] = parse_double(parts[static_cast<std::size_t>(k + 3)], "ellipsoid");
    e.n_interior = parse_double(parts[6], "ellipsoid");
    out.push_back(e);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"2D phase unwrapping toolkit"};
  app.require_subcommand(1);

  // simulate ----------------------------------------------------------------
  auto* sim = app.add_subcommand("simulate", "generate synthetic scenarios");
  GenParams gp;
  std::string sim_generator;
  std::string sim_out;
  std::vector<std::string> sim_ellipsoids;
  std::string sim_dist = "uniform";
  sim->add_option("generator", sim_generator,
                  "sample-b | sample-c | sample-d | sample-e | phantom | phasenet-data")
      ->required();
  sim->add_option("-o,--out", sim_out, "output directory")->required();
  sim->add_option("--size", gp.size, "grid size (square)");
  sim->add_option("--seed", gp.seed, "random seed");
  sim->add_option("--radius-y", gp.ellipse.radius_y, "ellipse vertical radius (px)");
  sim->add_option("--radius-x", gp.ellipse.radius_x, "ellipse horizontal radius (px)");
  sim->add_option("--amplitude", gp.ellipse.amplitude, "peak amplitude (rad)");
  sim->add_option("--sigma", gp.ellipse.sigma, "gaussian width vs normalized radius");
  sim->add_option("--crop", gp.ellipse.crop_angle, "cropped sector angle (deg)");
  sim->add_option("--max-value", gp.max_value, "sample-c exact maximum (rad)");
  sim->add_option("--matrix-size", gp.surface.matrix_size, "sample-d seed matrix size (odd, 3..11)");
  sim->add_option("--scale", gp.surface.scale, "sample-d surface scale");
  sim->add_option("--dist", sim_dist, "sample-d distribution: uniform | gaussian");
  sim->add_option("--snr", gp.snr_db, "sample-e speckle SNR (dB)");
  sim->add_option("--count", gp.count, "phasenet-data tuple count");
  sim->add_option("--wavelength", gp.phantom.wavelength, "phantom wavelength (um)");
  sim->add_option("--medium-ri", gp.phantom.medium_ri, "phantom medium refractive index");
  sim->add_option("--voxel-pitch", gp.phantom.voxel_pitch, "phantom ray sampling step (um)");
  sim->add_option("--pixel-pitch", gp.phantom.pixel_pitch, "phantom detector pitch (um)");
  sim->add_option("--shell-ri", gp.phantom.shell_ri, "phantom shell refractive index (0 = none)");
  sim->add_option("--shell-thickness", gp.phantom.shell_thickness, "phantom shell thickness (um)");
  sim->add_option("--ellipsoid", sim_ellipsoids, "phantom body: cx,cy,cz,ax,ay,az,n (um; repeatable)");

  // unwrap ------------------------------------------------------------------
  auto* unw = app.add_subcommand("unwrap", "unwrap a wrapped grid");
  std::string unw_in, unw_out, unw_method = "ls", unw_profile = "desk", unw_offset = "min";
  std::uint64_t unw_seed = 0;
  int unw_iters = -1, unw_refresh = -1, unw_stages = -1, unw_body = -1, unw_skip = -1, unw_input = -1;
  double unw_eps_min = -1.0, unw_eps_max = -1.0, unw_lr = -1.0;
  unw->add_option("-i,--in", unw_in, "wrapped grid file")->required();
  unw->add_option("-o,--out", unw_out, "output directory")->required();
  unw->add_option("-m,--method", unw_method, "itoh | ls | goldstein | irls | pudip");
  unw->add_option("--seed", unw_seed, "seed (pudip init and input)");
  unw->add_option("--profile", unw_profile, "desk | paper (pudip defaults)");
  unw->add_option("--iters", unw_iters, "pudip iterations");
  unw->add_option("--refresh", unw_refresh, "pudip weight refresh period");
  unw->add_option("--eps-min", unw_eps_min, "weight-law lower residual bound");
  unw->add_option("--eps-max", unw_eps_max, "weight-law upper residual bound");
  unw->add_option("--lr", unw_lr, "pudip learning rate");
  unw->add_option("--stages", unw_stages, "generator stages");
  unw->add_option("--body-channels", unw_body, "generator body channels");
  unw->add_option("--skip-channels", unw_skip, "generator skip channels");
  unw->add_option("--input-channels", unw_input, "generator input channels");
  unw->add_option("--offset", unw_offset, "output offset: min | corner");

  // evaluate ----------------------------------------------------------------
  auto* ev = app.add_subcommand("evaluate", "score an estimate, append metrics.csv");
  std::string ev_est, ev_truth, ev_psi, ev_scenario = "scenario", ev_method = "unknown", ev_out;
  std::uint64_t ev_seed = 0;
  double ev_wall = 0.0;
  ev->add_option("--estimate", ev_est, "estimate grid")->required();
  ev->add_option("--truth", ev_truth, "ground-truth grid")->required();
  ev->add_option("--wrapped", ev_psi, "wrapped measurement grid")->required();
  ev->add_option("--scenario", ev_scenario, "scenario id for the CSV row");
  ev->add_option("--method", ev_method, "method id for the CSV row");
  ev->add_option("--seed", ev_seed, "seed for the CSV row");
  ev->add_option("--wall-ms", ev_wall, "solver wall time to record");
  ev->add_option("-o,--out", ev_out, "output directory")->required();

  // bench -------------------------------------------------------------------
  auto* be = app.add_subcommand("bench", "run a scenario sweep");
  std::string be_scenario, be_out;
  bool be_strict = false;
  be->add_option("-s,--scenario", be_scenario, "scenario key=value file")->required();
  be->add_option("-o,--out", be_out, "output directory")->required();
  be->add_flag("--strict", be_strict, "nonzero exit if any cell fails");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (sim->parsed()) {
      gp.generator = sim_generator;
      gp.surface.dist = sim_dist == "gaussian" ? phz::datagen::SurfaceDist::GaussianShifted
                                               : phz::datagen::SurfaceDist::Uniform01;
      if (!sim_ellipsoids.empty()) gp.phantom.bodies = parse_ellipsoids(sim_ellipsoids);
      if (gp.phantom.bodies.empty()) gp.phantom.bodies.push_back(phz::datagen::Ellipsoid{});
      if (gp.generator != "sample-b" && gp.generator != "sample-c" && gp.generator != "sample-d" &&
          gp.generator != "sample-e" && gp.generator != "phantom" &&
          gp.generator != "phasenet-data")
        throw CLI::ValidationError("generator", "unknown generator: " + gp.generator);
      return cmd_simulate(gp, sim_out);
    }
    if (unw->parsed()) {
      UnwrapParams p = unw_profile == "paper" ? paper_profile() : desk_profile();
      p.method = unw_method;
      p.seed = unw_seed;
      if (unw_iters > 0) p.tcfg.iterations = unw_iters;
      if (unw_refresh > 0) p.tcfg.refresh_every = unw_refresh;
      p.tcfg.refresh_every = std::min(p.tcfg.refresh_every, p.tcfg.iterations);
      if (unw_eps_min > 0.0) p.tcfg.weight_bounds.eps_min = unw_eps_min;
      if (unw_eps_max > 0.0) p.tcfg.weight_bounds.eps_max = unw_eps_max;
      if (unw_lr > 0.0) p.tcfg.lr = unw_lr;
      if (unw_stages > 0) p.gcfg.stages = unw_stages;
      if (unw_body > 0) p.gcfg.body_channels = unw_body;
      if (unw_skip > 0) p.gcfg.skip_channels = unw_skip;
      if (unw_input > 0) p.gcfg.input_channels = unw_input;
      p.gcfg.offset_mode = unw_offset == "corner" ? phz::pudip::OffsetMode::CornerMeanSubtract
                                                  : phz::pudip::OffsetMode::MinSubtract;
      return cmd_unwrap(unw_in, p, unw_out);
    }
    if (ev->parsed())
      return cmd_evaluate(ev_est, ev_truth, ev_psi, ev_scenario, ev_method, ev_seed, ev_wall, ev_out);
    if (be->parsed()) return cmd_bench(be_scenario, be_out, be_strict);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const phz::numerical_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const phz::io::io_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
