#include "fermi/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace fermi {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr Engine kEngines[] = {Engine::classical_hard, Engine::classical_soft, Engine::quantum,
                               Engine::standard_map};

// Line (1-based) of the key at the end of `path`, found by searching for each
// quoted segment in turn. 0 when the key cannot be located.
std::size_t line_of(const std::string& text, const std::vector<std::string>& path) {
  std::size_t pos = 0;
  for (const std::string& key : path) {
    const std::size_t hit = text.find('"' + key + '"', pos);
    if (hit == std::string::npos) return 0;
    pos = hit;
  }
  return static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n')) + 1;
}

std::string dotted(const std::vector<std::string>& path) {
  std::string out;
  for (const auto& p : path) out += (out.empty() ? "" : ".") + p;
  return out;
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

class Reader {
 public:
  explicit Reader(const std::string& text) : text_(text) {}

  [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& msg) const {
    const std::size_t line = line_of(text_, path);
    std::string where = "config key '" + dotted(path) + "'";
    if (line > 0) where += " (line " + std::to_string(line) + ")";
    throw ConfigError(where + ": " + msg);
  }

  void check_keys(const json& obj, const std::vector<std::string>& path,
                  const std::vector<std::string>& allowed) const {
    for (const auto& [key, value] : obj.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) != allowed.end()) continue;
      auto p = path;
      p.push_back(key);
      std::string msg = "unknown key";
      if (auto s = suggest_key(key, allowed)) msg += "; did you mean '" + *s + "'?";
      fail(p, msg);
    }
  }

  const json& object(const json& obj, const std::vector<std::string>& path) const {
    if (!obj.is_object()) fail(path, "expected an object, got " + std::string(obj.type_name()));
    return obj;
  }

  double number(const json& v, const std::vector<std::string>& path) const {
    if (!v.is_number()) fail(path, "expected a number, got " + std::string(v.type_name()));
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(path, "expected a finite number");
    return d;
  }

  double positive(const json& v, const std::vector<std::string>& path) const {
    const double d = number(v, path);
    if (!(d > 0.0)) fail(path, "expected a positive number, got " + std::to_string(d));
    return d;
  }

  std::uint64_t integer(const json& v, const std::vector<std::string>& path) const {
    if (!v.is_number_unsigned()) {
      fail(path, "expected a non-negative integer, got " + std::string(v.type_name()));
    }
    return v.get<std::uint64_t>();
  }

  bool boolean(const json& v, const std::vector<std::string>& path) const {
    if (!v.is_boolean()) fail(path, "expected a boolean, got " + std::string(v.type_name()));
    return v.get<bool>();
  }

  std::string string(const json& v, const std::vector<std::string>& path) const {
    if (!v.is_string()) fail(path, "expected a string, got " + std::string(v.type_name()));
    return v.get<std::string>();
  }

 private:
  const std::string& text_;
};

}  // namespace

std::string_view engine_name(Engine e) {
  switch (e) {
    case Engine::classical_hard: return "classical-hard";
    case Engine::classical_soft: return "classical-soft";
    case Engine::quantum: return "quantum";
    case Engine::standard_map: return "standard-map";
  }
  return "?";
}

std::optional<Engine> parse_engine(std::string_view name) {
  for (Engine e : kEngines) {
    if (engine_name(e) == name) return e;
  }
  return std::nullopt;
}

std::optional<std::string> suggest_key(std::string_view key, const std::vector<std::string>& allowed) {
  std::optional<std::string> best;
  std::size_t best_d = 3;
  for (const auto& a : allowed) {
    const std::size_t d = edit_distance(key, a);
    if (d < best_d) {
      best_d = d;
      best = a;
    }
  }
  return best;
}

std::vector<double> RunConfig::lambdas() const {
  if (lambda) return {*lambda};
  std::vector<double> out;
  if (!lambda_range) return out;
  const auto& r = *lambda_range;
  if (r.count == 1) return {r.start};
  for (std::size_t i = 0; i < r.count; ++i) {
    // Endpoints exact, interior points by linear interpolation.
    const double f = static_cast<double>(i) / static_cast<double>(r.count - 1);
    out.push_back(i + 1 == r.count ? r.stop : r.start + f * (r.stop - r.start));
  }
  return out;
}

DimensionlessParams RunConfig::params(double lam) const {
  return DimensionlessParams{lam, quantum.kappa, quantum.v0, quantum.kbar};
}

PropagatorConfig RunConfig::propagator() const {
  PropagatorConfig p;
  p.dt = quantum.dt;
  if (quantum.absorber_on) {
    p.absorber = Absorber{quantum.absorber_frac, 0.125};
  } else {
    p.absorber.reset();
  }
  const auto total = static_cast<std::size_t>(std::llround(t_final / quantum.dt));
  p.sample_stride = std::max<std::size_t>(1, total / std::max<std::size_t>(1, samples - 1));
  return p;
}

RunConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto byte = std::min<std::size_t>(e.byte, text.size());
    const auto line = std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n') + 1;
    throw ConfigError("config is not valid JSON (line " + std::to_string(line) + "): " + e.what());
  }
  const Reader rd(text);
  rd.object(doc, {"<root>"});
  rd.check_keys(doc, {}, {"engine", "lambda", "t_final", "seed", "ensemble", "quantum", "samples",
                          "output_dir", "physical"});

  RunConfig cfg;
  if (!doc.contains("engine")) rd.fail({"engine"}, "required key missing");
  const std::string engine = rd.string(doc["engine"], {"engine"});
  if (auto e = parse_engine(engine)) {
    cfg.engine = *e;
  } else {
    rd.fail({"engine"}, "expected one of classical-hard, classical-soft, quantum, standard-map; got '" +
                            engine + "'");
  }

  if (!doc.contains("t_final")) rd.fail({"t_final"}, "required key missing");
  cfg.t_final = rd.positive(doc["t_final"], {"t_final"});
  if (doc.contains("seed")) cfg.seed = rd.integer(doc["seed"], {"seed"});
  if (doc.contains("samples")) {
    cfg.samples = rd.integer(doc["samples"], {"samples"});
    if (cfg.samples < 2) rd.fail({"samples"}, "expected at least 2");
  }
  if (doc.contains("output_dir")) {
    cfg.output_dir = rd.string(doc["output_dir"], {"output_dir"});
    if (cfg.output_dir.empty()) rd.fail({"output_dir"}, "expected a non-empty path");
  }

  if (doc.contains("quantum")) {
    const json& q = rd.object(doc["quantum"], {"quantum"});
    rd.check_keys(q, {"quantum"}, {"kbar", "v0", "kappa", "grid", "dt", "absorber"});
    if (q.contains("kbar")) cfg.quantum.kbar = rd.positive(q["kbar"], {"quantum", "kbar"});
    if (q.contains("v0")) cfg.quantum.v0 = rd.positive(q["v0"], {"quantum", "v0"});
    if (q.contains("kappa")) cfg.quantum.kappa = rd.positive(q["kappa"], {"quantum", "kappa"});
    if (q.contains("dt")) cfg.quantum.dt = rd.positive(q["dt"], {"quantum", "dt"});
    if (q.contains("grid")) {
      const json& g = rd.object(q["grid"], {"quantum", "grid"});
      rd.check_keys(g, {"quantum", "grid"}, {"z_min", "z_max", "n_points"});
      for (const char* k : {"z_min", "z_max", "n_points"}) {
        if (!g.contains(k)) rd.fail({"quantum", "grid", k}, "required key missing");
      }
      GridConfig gc;
      gc.z_min = rd.number(g["z_min"], {"quantum", "grid", "z_min"});
      gc.z_max = rd.number(g["z_max"], {"quantum", "grid", "z_max"});
      gc.n_points = rd.integer(g["n_points"], {"quantum", "grid", "n_points"});
      try {
        SpatialGrid(gc.z_min, gc.z_max, gc.n_points);
      } catch (const InvalidParameter& e) {
        rd.fail({"quantum", "grid"}, e.what());
      }
      cfg.quantum.grid = gc;
    }
    if (q.contains("absorber")) {
      const json& a = rd.object(q["absorber"], {"quantum", "absorber"});
      rd.check_keys(a, {"quantum", "absorber"}, {"frac", "on"});
      if (a.contains("frac")) {
        cfg.quantum.absorber_frac = rd.positive(a["frac"], {"quantum", "absorber", "frac"});
        if (!(cfg.quantum.absorber_frac < 0.5)) rd.fail({"quantum", "absorber", "frac"}, "expected a value below 0.5");
      }
      if (a.contains("on")) cfg.quantum.absorber_on = rd.boolean(a["on"], {"quantum", "absorber", "on"});
    }
  }

  if (doc.contains("physical")) {
    const json& ph = rd.object(doc["physical"], {"physical"});
    const std::vector<std::string> keys{"mass", "gravity", "omega", "decay_k", "rabi_eff", "epsilon"};
    rd.check_keys(ph, {"physical"}, keys);
    PhysicalParams pp;
    double* fields[] = {&pp.mass, &pp.gravity, &pp.omega, &pp.decay_k, &pp.rabi_eff, &pp.epsilon};
    for (std::size_t i = 0; i < keys.size(); ++i) {
      if (!ph.contains(keys[i])) rd.fail({"physical", keys[i]}, "required key missing");
      *fields[i] = rd.positive(ph[keys[i]], {"physical", keys[i]});
    }
    const DimensionlessParams dp = scale_params(pp);
    cfg.physical = pp;
    cfg.quantum.kbar = dp.kbar;
    cfg.quantum.v0 = dp.v0;
    cfg.quantum.kappa = dp.kappa;
    if (doc.contains("lambda")) {
      rd.fail({"lambda"}, "must be omitted when 'physical' is given (derived from epsilon)");
    }
    cfg.lambda = dp.lambda;
  } else {
    if (!doc.contains("lambda")) rd.fail({"lambda"}, "required key missing");
    const json& l = doc["lambda"];
    if (l.is_number()) {
      cfg.lambda = rd.number(l, {"lambda"});
    } else if (l.is_object()) {
      rd.check_keys(l, {"lambda"}, {"start", "stop", "count"});
      for (const char* k : {"start", "stop", "count"}) {
        if (!l.contains(k)) rd.fail({"lambda", k}, "required key missing");
      }
      LambdaRange r;
      r.start = rd.number(l["start"], {"lambda", "start"});
      r.stop = rd.number(l["stop"], {"lambda", "stop"});
      r.count = rd.integer(l["count"], {"lambda", "count"});
      if (r.count == 0) rd.fail({"lambda", "count"}, "lambda range is empty");
      if (r.count > 1 && !(r.stop > r.start)) rd.fail({"lambda", "stop"}, "expected stop > start");
      cfg.lambda_range = r;
    } else {
      rd.fail({"lambda"}, "expected a number or an object {start, stop, count}, got " +
                              std::string(l.type_name()));
    }
  }
  for (double lam : cfg.lambdas()) {
    if (cfg.engine == Engine::standard_map ? !(lam > 0.0) : !(lam >= 0.0)) {
      rd.fail({"lambda"}, "expected lambda >= 0 (> 0 for standard-map), got " + std::to_string(lam));
    }
  }

  // The quantum packet is minimum-uncertainty, so p_std follows from z_std.
  const PacketSpec broad{};
  cfg.ensemble.z_mean = broad.z_mean;
  cfg.ensemble.p_mean = broad.p_mean;
  cfg.ensemble.z_std = broad.z_std;
  cfg.ensemble.p_std = cfg.engine == Engine::quantum ? 0.5 * cfg.quantum.kbar / broad.z_std : 0.5;
  cfg.ensemble.seed = cfg.seed;
  bool p_std_given = false;
  if (doc.contains("ensemble")) {
    const json& e = rd.object(doc["ensemble"], {"ensemble"});
    rd.check_keys(e, {"ensemble"}, {"n", "z_mean", "p_mean", "z_std", "p_std"});
    if (e.contains("n")) cfg.ensemble.n_particles = rd.integer(e["n"], {"ensemble", "n"});
    if (e.contains("z_mean")) cfg.ensemble.z_mean = rd.number(e["z_mean"], {"ensemble", "z_mean"});
    if (e.contains("p_mean")) cfg.ensemble.p_mean = rd.number(e["p_mean"], {"ensemble", "p_mean"});
    if (e.contains("z_std")) cfg.ensemble.z_std = rd.positive(e["z_std"], {"ensemble", "z_std"});
    if (e.contains("p_std")) {
      cfg.ensemble.p_std = rd.positive(e["p_std"], {"ensemble", "p_std"});
      p_std_given = true;
    }
    if (cfg.ensemble.n_particles == 0) rd.fail({"ensemble", "n"}, "expected at least 1 particle");
  }
  if (cfg.engine == Engine::quantum) {
    const double implied = 2.0 * cfg.ensemble.z_std * cfg.ensemble.p_std;
    if (!p_std_given) {
      cfg.ensemble.p_std = cfg.quantum.kbar / (2.0 * cfg.ensemble.z_std);
    } else if (std::abs(implied - cfg.quantum.kbar) > 0.01 * cfg.quantum.kbar) {
      rd.fail({"ensemble", "p_std"},
              "a Gaussian packet has z_std * p_std = kbar/2; these values imply kbar = " +
                  std::to_string(implied) + " but quantum.kbar = " + std::to_string(cfg.quantum.kbar));
    }
    if (!cfg.quantum.grid) {
      double lam_max = 0.0;
      for (double lam : cfg.lambdas()) lam_max = std::max(lam_max, std::abs(lam));
      const PacketSpec packet{cfg.ensemble.z_mean, cfg.ensemble.p_mean, cfg.ensemble.z_std};
      const SpatialGrid g = auto_grid(cfg.params(lam_max), packet, cfg.t_final, cfg.propagator());
      cfg.quantum.grid = GridConfig{g.z_min(), g.z_max(), g.size()};
    }
  }
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string config_to_json(const RunConfig& cfg) {
  ordered_json j;
  j["engine"] = std::string(engine_name(cfg.engine));
  if (cfg.lambda_range) {
    j["lambda"] = {{"start", cfg.lambda_range->start},
                   {"stop", cfg.lambda_range->stop},
                   {"count", cfg.lambda_range->count}};
  } else if (cfg.lambda && !cfg.physical) {
    j["lambda"] = *cfg.lambda;
  }
  j["t_final"] = cfg.t_final;
  j["seed"] = cfg.seed;
  j["ensemble"] = {{"n", cfg.ensemble.n_particles},
                   {"z_mean", cfg.ensemble.z_mean},
                   {"p_mean", cfg.ensemble.p_mean},
                   {"z_std", cfg.ensemble.z_std},
                   {"p_std", cfg.ensemble.p_std}};
  ordered_json q;
  q["kbar"] = cfg.quantum.kbar;
  q["v0"] = cfg.quantum.v0;
  q["kappa"] = cfg.quantum.kappa;
  if (cfg.quantum.grid) {
    q["grid"] = {{"z_min", cfg.quantum.grid->z_min},
                 {"z_max", cfg.quantum.grid->z_max},
                 {"n_points", cfg.quantum.grid->n_points}};
  }
  q["dt"] = cfg.quantum.dt;
  q["absorber"] = {{"frac", cfg.quantum.absorber_frac}, {"on", cfg.quantum.absorber_on}};
  j["quantum"] = q;
  j["samples"] = cfg.samples;
  j["output_dir"] = cfg.output_dir;
  if (cfg.physical) {
    const auto& p = *cfg.physical;
    j["physical"] = {{"mass", p.mass},         {"gravity", p.gravity},   {"omega", p.omega},
                     {"decay_k", p.decay_k},   {"rabi_eff", p.rabi_eff}, {"epsilon", p.epsilon}};
  }
  return j.dump(2) + "\n";
}

}  // namespace fermi
