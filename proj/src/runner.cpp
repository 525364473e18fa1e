#include "fermi/runner.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>

#include "fermi/classical.hpp"
#include "fermi/io.hpp"
#include "fermi/quantum.hpp"
#include "fermi/stats.hpp"
#include "fermi/svg.hpp"

namespace fermi {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::vector<std::string> kSeriesHeader{"t", "norm", "z_mean", "dz", "p_mean", "dp2", "absorbed"};
const std::vector<std::string> kSweepHeader{"lambda", "dp", "dz", "mean_bounces", "alpha", "comb_contrast"};

ordered_json json_number(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

double alpha_of(const std::vector<double>& t, const std::vector<double>& dp2) {
  std::vector<double> tt, yy;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] > 0.0) {
      tt.push_back(t[i]);
      yy.push_back(dp2[i]);
    }
  }
  try {
    return fit_power_law(tt, yy).alpha;
  } catch (const Error&) {
    return kNaN;
  }
}

PointOutcome pending_point(double lambda) {
  PointOutcome p;
  p.lambda = lambda;
  return p;
}

struct PointFiles {
  std::vector<std::pair<std::string, std::string>> files;  // name, content
};

struct Orchestrator {
  const RunConfig& cfg;
  fs::path dir;
  std::vector<PointOutcome> points{};
  std::vector<std::string> files{};
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  std::mutex mutex{};

  ordered_json derived() const {
    ordered_json d;
    d["momentum_bin"] = kMomentumBin;
    if (cfg.physical) {
      const DimensionlessParams p = scale_params(*cfg.physical);
      d["physical_scaled"] = {{"lambda", p.lambda}, {"kappa", p.kappa}, {"v0", p.v0}, {"kbar", p.kbar}};
    }
    if (cfg.engine == Engine::quantum) {
      d["packet_kbar"] = 2.0 * cfg.ensemble.z_std * cfg.ensemble.p_std;
      const PropagatorConfig pc = cfg.propagator();
      d["sample_stride"] = pc.sample_stride;
      d["steps"] = static_cast<std::uint64_t>(std::llround(cfg.t_final / cfg.quantum.dt));
    }
    if (cfg.engine == Engine::classical_soft) d["soft_dt"] = EvolveOptions{}.soft_dt;
    if (cfg.engine == Engine::standard_map) {
      d["kick"] = "K = 4 lambda";
      d["steps"] = static_cast<std::uint64_t>(std::llround(cfg.t_final));
    }
    ordered_json pts = ordered_json::array();
    for (double lam : cfg.lambdas()) {
      ordered_json e;
      e["lambda"] = lam;
      if (auto w = in_window(lam)) {
        e["window_s"] = w->s();
      } else {
        e["window_s"] = nullptr;
      }
      pts.push_back(e);
    }
    d["points"] = pts;
    return d;
  }

  // Caller holds the mutex.
  void write_manifest() {
    ordered_json m;
    m["tool"] = "fermi";
    m["version"] = std::string(kVersion);
    m["config"] = ordered_json::parse(config_to_json(cfg));
    m["derived"] = derived();
    ordered_json pts = ordered_json::array();
    for (const PointOutcome& p : points) {
      ordered_json e{{"lambda", p.lambda}, {"status", p.status}};
      if (!p.error.empty()) e["error"] = p.error;
      if (!p.warnings.empty()) e["warnings"] = p.warnings;
      pts.push_back(e);
    }
    m["points"] = pts;
    ordered_json fl = ordered_json::array();
    std::vector<std::string> sorted = files;
    std::sort(sorted.begin(), sorted.end());
    for (const std::string& name : sorted) {
      const FileRecord r = record_file(dir, name);
      fl.push_back({{"name", r.name}, {"bytes", r.bytes}, {"sha256", r.sha256}});
    }
    m["files"] = fl;
    m["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_atomic(dir / "manifest.json", m.dump(2) + "\n");
  }

  void emit(const std::string& name, const std::string& content) {
    write_atomic(dir / name, content);
    if (std::find(files.begin(), files.end(), name) == files.end()) files.push_back(name);
  }

  PointFiles classical_point(double lam, WallMode mode, std::size_t threads, PointOutcome& out) {
    EvolveOptions o;
    o.threads = threads;
    o.p_bin_width = kMomentumBin;
    EnsembleSpec spec = cfg.ensemble;
    spec.seed = cfg.seed;
    const EnsembleSeries s = evolve_ensemble(spec, cfg.params(lam), mode, cfg.t_final, cfg.samples, o);
    const double n = static_cast<double>(spec.n_particles);
    const double kept = 1.0 - static_cast<double>(s.excluded) / n;
    CsvTable series{kSeriesHeader, std::vector<std::vector<double>>(7)};
    for (std::size_t i = 0; i < s.sample_times.size(); ++i) {
      series.columns[0].push_back(s.sample_times[i]);
      series.columns[1].push_back(kept);
      series.columns[2].push_back(s.z_mean[i]);
      series.columns[3].push_back(s.dz[i]);
      series.columns[4].push_back(s.p_mean[i]);
      series.columns[5].push_back(s.dp[i] * s.dp[i]);
      series.columns[6].push_back(1.0 - kept);
    }
    const Density hist{s.final_p_hist.centers(), s.final_p_hist.densities};
    if (s.excluded > 0) out.warnings.push_back(std::to_string(s.excluded) + " particles excluded");
    if (s.clamped_steps > 0) out.warnings.push_back(std::to_string(s.clamped_steps) + " clamped soft steps");
    out.row = SweepRow{lam, s.dp.back(), s.dz.back(), s.mean_bounces.back(),
                       alpha_of(series.columns[0], series.columns[5]), analyze_comb(hist).contrast};
    return hist_and_series(lam, series, hist);
  }

  PointFiles quantum_point(double lam, PointOutcome& out) {
    const GridConfig& g = *cfg.quantum.grid;
    const SpatialGrid grid(g.z_min, g.z_max, g.n_points);
    const Wavefunction psi =
        init_gaussian(grid, cfg.ensemble.z_mean, cfg.ensemble.p_mean, cfg.ensemble.z_std, cfg.quantum.kbar);
    const QuantumSeries s = evolve_quantum(psi, cfg.params(lam), cfg.propagator(), cfg.t_final);
    CsvTable series{kSeriesHeader, {s.t, s.norm, s.z_mean, s.dz, s.p_mean, s.dp2, s.absorbed}};
    const Density hist = coarse_grain(s.final_momentum.p, s.final_momentum.density, kMomentumBin);
    if (s.absorber_warning) {
      out.warnings.push_back("absorbed norm " + format_double(s.absorbed.back()) +
                             " exceeds 0.2: grid too small for the accelerating packet");
    }
    out.row = SweepRow{lam, std::sqrt(s.dp2.back()), s.dz.back(), kNaN, alpha_of(s.t, s.dp2),
                       analyze_comb(hist).contrast};
    return hist_and_series(lam, series, hist);
  }

  static PointFiles hist_and_series(double lam, const CsvTable& series, const Density& hist) {
    PointFiles f;
    f.files.emplace_back("series_" + lambda_tag(lam) + ".csv", to_csv(series));
    f.files.emplace_back("hist_" + lambda_tag(lam) + ".csv", to_csv(CsvTable{{"bin_center", "density"}, {hist.x, hist.y}}));
    return f;
  }
};

}  // namespace

bool RunResult::any_failed() const {
  return std::any_of(points.begin(), points.end(), [](const PointOutcome& p) { return p.status != "completed"; });
}

std::string lambda_tag(double lambda) {
  std::array<char, 64> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), lambda, std::chars_format::fixed, 4);
  return "lambda=" + std::string(buf.data(), r.ptr);
}

RunResult run(const RunConfig& cfg, const RunOptions& options) {
  const std::vector<double> lambdas = cfg.lambdas();
  if (lambdas.empty()) throw ConfigError("lambda list is empty");
  std::vector<std::string> tags;
  for (double l : lambdas) tags.push_back(lambda_tag(l));
  std::sort(tags.begin(), tags.end());
  if (std::adjacent_find(tags.begin(), tags.end()) != tags.end()) {
    throw ConfigError("lambda points closer than 1e-4 would share output files");
  }

  Orchestrator orc{cfg, fs::path(cfg.output_dir)};
  std::error_code ec;
  fs::create_directories(orc.dir, ec);
  if (ec || !fs::is_directory(orc.dir)) {
    throw ConfigError("output_dir '" + cfg.output_dir + "' cannot be created: " + ec.message());
  }
  for (double l : lambdas) orc.points.push_back(pending_point(l));
  {
    std::lock_guard lock(orc.mutex);
    orc.write_manifest();
  }

  const std::size_t threads = options.threads == 0 ? default_thread_count() : options.threads;
  const std::size_t outer = std::min(threads, lambdas.size());
  const std::size_t inner = outer > 1 ? 1 : threads;

  if (cfg.engine == Engine::standard_map) {
    std::vector<std::array<double, 5>> rows(lambdas.size());
    parallel_for(lambdas.size(), outer, [&](std::size_t i) {
      PointOutcome out = pending_point(lambdas[i]);
      try {
        const double k = 4.0 * lambdas[i];
        const double d = standard_map_diffusion(k, cfg.ensemble.n_particles,
                                                static_cast<std::size_t>(std::llround(cfg.t_final)),
                                                cfg.seed, inner);
        const DiffusionLaw law = diffusion_coefficient_for_kick(k);
        rows[i] = {lambdas[i], k, d, law.d_lambda, law.d0};
        out.status = "completed";
      } catch (const Error& e) {
        rows[i] = {lambdas[i], 4.0 * lambdas[i], kNaN, kNaN, kNaN};
        out.status = "failed";
        out.error = e.what();
      }
      std::lock_guard lock(orc.mutex);
      orc.points[i] = out;
      orc.write_manifest();
      if (options.on_point) options.on_point(out);
    });
    CsvTable t{{"lambda", "kick", "d_measured", "d_law", "d0"}, std::vector<std::vector<double>>(5)};
    for (const auto& r : rows) {
      for (std::size_t c = 0; c < 5; ++c) t.columns[c].push_back(r[c]);
    }
    std::lock_guard lock(orc.mutex);
    orc.emit("diffusion.csv", to_csv(t));
    orc.write_manifest();
    return RunResult{orc.dir, orc.points, orc.files};
  }

  parallel_for(lambdas.size(), outer, [&](std::size_t i) {
    PointOutcome out = pending_point(lambdas[i]);
    PointFiles pf;
    try {
      switch (cfg.engine) {
        case Engine::classical_hard: pf = orc.classical_point(lambdas[i], WallMode::hard, inner, out); break;
        case Engine::classical_soft: pf = orc.classical_point(lambdas[i], WallMode::soft, inner, out); break;
        case Engine::quantum: pf = orc.quantum_point(lambdas[i], out); break;
        case Engine::standard_map: break;
      }
      out.status = "completed";
    } catch (const Error& e) {
      out.status = "failed";
      out.error = e.what();
      out.row.reset();
    }
    std::lock_guard lock(orc.mutex);
    for (const auto& [name, content] : pf.files) orc.emit(name, content);
    orc.points[i] = out;
    orc.write_manifest();
    if (options.on_point) options.on_point(out);
  });

  CsvTable sweep{kSweepHeader, std::vector<std::vector<double>>(6)};
  std::vector<double> lam, dp, nb;
  for (const PointOutcome& p : orc.points) {
    const SweepRow r = p.row.value_or(SweepRow{p.lambda, kNaN, kNaN, kNaN, kNaN, kNaN});
    const std::array<double, 6> v{r.lambda, r.dp, r.dz, r.mean_bounces, r.alpha, r.comb_contrast};
    for (std::size_t c = 0; c < 6; ++c) sweep.columns[c].push_back(v[c]);
    if (p.row) {
      lam.push_back(r.lambda);
      dp.push_back(r.dp);
      nb.push_back(r.mean_bounces);
    }
  }
  std::lock_guard lock(orc.mutex);
  orc.emit("sweep.csv", to_csv(sweep));
  const bool classical = cfg.engine == Engine::classical_hard || cfg.engine == Engine::classical_soft;
  if (classical && lam.size() >= 3) {
    orc.emit("fig1.svg", fig1_svg(lam, dp, nb));
    orc.emit("fig3.svg", fig3_svg(lam, dp));
  }
  if (cfg.engine == Engine::quantum) {
    std::vector<BreathingSeries> runs;
    for (const PointOutcome& p : orc.points) {
      if (p.status != "completed") continue;
      const CsvTable s = read_csv(orc.dir / ("series_" + lambda_tag(p.lambda) + ".csv"));
      runs.push_back({p.lambda, s.column("t"), s.column("dp2"), s.column("dz")});
    }
    if (!runs.empty()) orc.emit("fig4.svg", fig4_svg(runs));
  }
  orc.write_manifest();
  return RunResult{orc.dir, orc.points, orc.files};
}

namespace {

nlohmann::json load_manifest(const fs::path& dir) {
  const fs::path p = dir / "manifest.json";
  if (!fs::exists(p)) throw ConfigError("no manifest.json in " + dir.string());
  return nlohmann::json::parse(read_file(p));
}

std::vector<double> completed_lambdas(const nlohmann::json& m) {
  std::vector<double> out;
  for (const auto& p : m.at("points")) {
    if (p.value("status", "") == "completed") out.push_back(p.at("lambda").get<double>());
  }
  return out;
}

// Appends `name` to the manifest file list (re-hashing everything listed).
void register_file(const fs::path& dir, const std::string& name) {
  nlohmann::ordered_json m = nlohmann::ordered_json::parse(read_file(dir / "manifest.json"));
  std::vector<std::string> names;
  for (const auto& f : m["files"]) names.push_back(f["name"].get<std::string>());
  if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
  std::sort(names.begin(), names.end());
  nlohmann::ordered_json fl = nlohmann::ordered_json::array();
  for (const auto& n : names) {
    const FileRecord r = record_file(dir, n);
    fl.push_back({{"name", r.name}, {"bytes", r.bytes}, {"sha256", r.sha256}});
  }
  m["files"] = fl;
  write_atomic(dir / "manifest.json", m.dump(2) + "\n");
}

}  // namespace

AnalysisReport analyze_directory(const fs::path& dir) {
  const nlohmann::json m = load_manifest(dir);
  AnalysisReport rep;
  ordered_json out;
  ordered_json combs = ordered_json::array();
  for (double lam : completed_lambdas(m)) {
    const fs::path h = dir / ("hist_" + lambda_tag(lam) + ".csv");
    if (!fs::exists(h)) continue;
    const CsvTable t = read_csv(h);
    const CombReport c = analyze_comb(Density{t.column("bin_center"), t.column("density")});
    ordered_json e{{"lambda", lam}, {"peaks", c.peaks.size()}, {"median_spacing", c.median_spacing},
                   {"contrast", c.contrast}};
    if (c.fit) {
      e["fit"] = {{"envelope_sigma", c.fit->envelope_sigma}, {"spike_sigma", c.fit->spike_sigma},
                  {"spacing", c.fit->spacing}, {"residual", c.fit->residual}};
    }
    combs.push_back(e);
    rep.combs.emplace_back(lam, c);
  }
  out["combs"] = combs;
  if (fs::exists(dir / "sweep.csv")) {
    const CsvTable s = read_csv(dir / "sweep.csv");
    std::vector<SweepSample> pts;
    for (std::size_t i = 0; i < s.rows(); ++i) {
      if (std::isfinite(s.column("dp")[i])) pts.push_back({s.column("lambda")[i], s.column("dp")[i]});
    }
    try {
      double top = 0.0;
      for (const auto& p : pts) top = std::max(top, p.lambda);
      rep.sweep = sweep_summary(pts, top > 0.0 ? windows_up_to(top) : std::vector<Window>{});
      ordered_json ws = ordered_json::array();
      for (const WindowSummary& w : rep.sweep->windows) {
        ws.push_back({{"s", w.window.s()},
                      {"lo", w.window.lo()},
                      {"hi", w.window.hi()},
                      {"center", w.window.center()},
                      {"samples_inside", w.samples_inside},
                      {"dip_ratio", w.dip_ratio},
                      {"has_dip", w.has_dip},
                      {"nearest_maximum", w.nearest_maximum ? json_number(*w.nearest_maximum) : ordered_json(nullptr)},
                      {"maximum_offset_steps", w.maximum_offset_steps}});
      }
      out["sweep"] = {{"grid_step", rep.sweep->grid_step}, {"local_maxima", rep.sweep->local_maxima}, {"windows", ws}};
    } catch (const Error& e) {
      rep.sweep_error = e.what();
      out["sweep_error"] = rep.sweep_error;
    }
  }
  write_atomic(dir / "analysis.json", out.dump(2) + "\n");
  register_file(dir, "analysis.json");
  return rep;
}

fs::path plot_directory(const fs::path& dir, int kind) {
  std::string svg;
  if (kind == 1 || kind == 3) {
    if (!fs::exists(dir / "sweep.csv")) throw InvalidParameter("fig" + std::to_string(kind) + ": missing input sweep.csv");
    const CsvTable s = read_csv(dir / "sweep.csv");
    std::vector<double> lam, dp, nb;
    for (std::size_t i = 0; i < s.rows(); ++i) {
      if (!std::isfinite(s.column("dp")[i])) continue;
      lam.push_back(s.column("lambda")[i]);
      dp.push_back(s.column("dp")[i]);
      nb.push_back(s.column("mean_bounces")[i]);
    }
    svg = kind == 1 ? fig1_svg(lam, dp, nb) : fig3_svg(lam, dp);
  } else if (kind == 2) {
    std::vector<std::string> missing;
    for (const char* sub : {"classical", "quantum"}) {
      if (!fs::exists(dir / sub / "manifest.json")) missing.push_back(std::string(sub) + "/manifest.json");
    }
    if (!missing.empty()) {
      std::string msg = "fig2: missing inputs:";
      for (const auto& s : missing) msg += " " + s;
      throw InvalidParameter(msg);
    }
    const std::vector<double> lc = completed_lambdas(load_manifest(dir / "classical"));
    const std::vector<double> lq = completed_lambdas(load_manifest(dir / "quantum"));
    std::vector<MirrorPair> pairs;
    for (double l : lc) {
      const auto it = std::find_if(lq.begin(), lq.end(), [&](double q) { return lambda_tag(q) == lambda_tag(l); });
      if (it == lq.end()) continue;
      const CsvTable c = read_csv(dir / "classical" / ("hist_" + lambda_tag(l) + ".csv"));
      const CsvTable q = read_csv(dir / "quantum" / ("hist_" + lambda_tag(l) + ".csv"));
      pairs.push_back({l, c.column("bin_center"), c.column("density"), q.column("bin_center"), q.column("density")});
    }
    svg = fig2_svg(pairs);
  } else if (kind == 4) {
    const nlohmann::json m = load_manifest(dir);
    std::vector<BreathingSeries> runs;
    for (double l : completed_lambdas(m)) {
      const fs::path p = dir / ("series_" + lambda_tag(l) + ".csv");
      if (!fs::exists(p)) continue;
      const CsvTable s = read_csv(p);
      runs.push_back({l, s.column("t"), s.column("dp2"), s.column("dz")});
    }
    svg = fig4_svg(runs);
  } else {
    throw InvalidParameter("figure kind must be 1..4");
  }
  const std::string name = "fig" + std::to_string(kind) + ".svg";
  write_atomic(dir / name, svg);
  if (kind != 2) register_file(dir, name);
  return dir / name;
}

}  // namespace fermi
