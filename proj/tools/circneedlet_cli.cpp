// circneedlet_cli: config-driven front end over the library.
//
//   circneedlet_cli <command> [--config file] [--out dir] [--seed n] [--threads n] [--cell j=..,t=..]
//
// Settings resolve as built-in defaults < config file < flags. The resolved
// config is written into <out>/manifest.json together with a hash of every
// output file; passing that manifest back as --config replays the run.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <yaml-cpp/yaml.h>

#include "circneedlet/circneedlet.hpp"

namespace fs = std::filesystem;
using namespace circneedlet;

namespace {

constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------- config

json yaml_to_json(const YAML::Node& n) {
  switch (n.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined: return nullptr;
    case YAML::NodeType::Sequence: {
      json a = json::array();
      for (const auto& e : n) a.push_back(yaml_to_json(e));
      return a;
    }
    case YAML::NodeType::Map: {
      json o = json::object();
      for (const auto& kv : n) o[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return o;
    }
    case YAML::NodeType::Scalar: break;
  }
  const std::string s = n.Scalar();
  if (n.Tag() == "!") return s;  // quoted
  if (s == "true" || s == "True") return true;
  if (s == "false" || s == "False") return false;
  if (s == "null" || s == "~") return nullptr;
  // integers first so 64-bit seeds survive
  try {
    std::size_t used = 0;
    if (!s.empty() && s[0] != '-') {
      const unsigned long long u = std::stoull(s, &used, 10);
      if (used == s.size()) return u;
    } else {
      const long long v = std::stoll(s, &used, 10);
      if (used == s.size()) return v;
    }
  } catch (const std::exception&) {
  }
  try {
    std::size_t used = 0;
    const double d = std::stod(s, &used);
    if (used == s.size()) return d;
  } catch (const std::exception&) {
  }
  return s;
}

json load_config_file(const fs::path& path, const std::string& command) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::BadFile&) {
    throw IoError("cannot read config " + path.string());
  } catch (const YAML::Exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  json j = yaml_to_json(root);
  if (j.is_null()) return json::object();
  if (!j.is_object()) throw ConfigError("config must be a mapping");
  // a manifest from an earlier run
  if (j.contains("manifest_version")) {
    if (j.value("command", "") != command) {
      throw ConfigError("manifest was written by '" + j.value("command", "") + "', not '" + command + "'");
    }
    return j.at("config");
  }
  return j;
}

// Every key in `given` must exist in `defaults`; typos would otherwise be
// silently ignored.
void check_keys(const json& defaults, const json& given, const std::string& where) {
  for (auto it = given.begin(); it != given.end(); ++it) {
    if (!defaults.contains(it.key())) throw ConfigError("unknown config key '" + where + it.key() + "'");
    const auto& d = defaults.at(it.key());
    if (d.is_object() && it.value().is_object()) check_keys(d, it.value(), where + it.key() + ".");
  }
}

// Recursive overwrite; unlike JSON merge-patch a null value is kept.
void deep_merge(json& into, const json& from) {
  for (auto it = from.begin(); it != from.end(); ++it) {
    if (into.contains(it.key()) && into[it.key()].is_object() && it.value().is_object()) {
      deep_merge(into[it.key()], it.value());
    } else {
      into[it.key()] = it.value();
    }
  }
}

json common_defaults() {
  return {{"seed", 20240601ULL},
          {"threads", 1},
          {"params", {{"B", 1.3}, {"s", 3}, {"eta", 1.0}, {"trunc_eps", 1e-12}}},
          {"density", {{"kind", "uniform"}, {"kappa", 0.0}, {"weight", 0.5}}}};
}

json grid_block(std::vector<double> t, double R, std::vector<int> j, std::size_t reps) {
  return {{"t_values", t}, {"R", R}, {"j_values", j}, {"center", std::numbers::pi}, {"n_reps", reps},
          {"mode", "poissonized"}};
}

json command_defaults(const std::string& cmd) {
  json d = common_defaults();
  if (cmd == "eval") {
    d["eval"] = {{"j", 10}, {"center", std::numbers::pi}, {"lambda", nullptr}, {"points", 4096},
                 {"weight_points", 2001}, {"weight_x_max", 20.0}};
  } else if (cmd == "frame-check") {
    d["params"]["eta"] = 0.25;
    d["frame_check"] = {{"polynomials", 20}, {"max_degree", 20}, {"j_min", -30}, {"j_max", 40},
                        {"window_points", 2001}};
  } else if (cmd == "simulate") {
    d["grid"] = grid_block({50, 100, 150}, 10.0, {10, 20, 30}, 500);
    d["grid"]["bounds"] = false;
    d["grid"]["histogram_bins"] = 20;
  } else if (cmd == "reproduce-table1") {
    d["grid"] = grid_block({50, 100, 150}, 10.0, {10, 20, 30}, 500);
    d["counterexample"] = {{"enabled", true}, {"t_values", {5.0}}, {"j_values", {30, 40}}};
  } else if (cmd == "bounds") {
    d["bounds"] = {{"j_values", {8, 10, 12}}, {"t_values", {50, 100, 150}}, {"R", 10.0}, {"q", {0}}};
  } else if (cmd == "rates") {
    d["grid"] = grid_block({100, 1000, 10000}, 1.0, {6, 7, 8, 9, 10, 11, 12, 13, 14}, 2000);
  } else if (cmd == "estimate") {
    d["density"] = {{"kind", "von_mises"}, {"kappa", 2.0}, {"weight", 0.5}};
    d["estimate"] = {{"n", 2000}, {"kappa", 2.0}, {"J0", 0}, {"n_reps", 1}, {"grid_points", 1024},
                     {"pilot", {{"reps", 200}, {"level", nullptr}, {"quantile", 0.995}}}};
  }
  return d;
}

struct Flags {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string cell;
};

// "j=10,t=50" → {j, t}
std::pair<int, double> parse_cell(const std::string& s) {
  std::optional<int> j;
  std::optional<double> t;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t comma = std::min(s.find(',', pos), s.size());
    const std::string item = s.substr(pos, comma - pos);
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("--cell: expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    const std::string val = item.substr(eq + 1);
    try {
      if (key == "j") {
        j = std::stoi(val);
      } else if (key == "t") {
        t = std::stod(val);
      } else {
        throw ConfigError("--cell: unknown key '" + key + "'");
      }
    } catch (const std::logic_error&) {
      throw ConfigError("--cell: bad value in '" + item + "'");
    }
    pos = comma + 1;
  }
  if (!j || !t) throw ConfigError("--cell needs both j and t");
  return {*j, *t};
}

json resolve_config(const std::string& cmd, const Flags& f) {
  json cfg = command_defaults(cmd);
  if (!f.config.empty()) {
    const json given = load_config_file(f.config, cmd);
    check_keys(cfg, given, "");
    deep_merge(cfg, given);
  }
  if (f.seed) cfg["seed"] = *f.seed;
  if (f.threads) cfg["threads"] = *f.threads;
  if (!f.cell.empty()) {
    const auto [j, t] = parse_cell(f.cell);
    if (cfg.contains("grid")) {
      cfg["grid"]["j_values"] = {j};
      cfg["grid"]["t_values"] = {t};
    }
    if (cfg.contains("counterexample")) cfg["counterexample"]["enabled"] = false;
    if (cfg.contains("bounds")) {
      cfg["bounds"]["j_values"] = {j};
      cfg["bounds"]["t_values"] = {t};
    }
    if (cfg.contains("eval")) cfg["eval"]["j"] = j;
  }
  return cfg;
}

NeedletParams params_from(const json& c) {
  NeedletParams p;
  p.B = c.at("B").get<double>();
  p.s = c.at("s").get<int>();
  p.eta = c.at("eta").get<double>();
  p.trunc_eps = c.at("trunc_eps").get<double>();
  p.validate();
  return p;
}

DensitySpec density_from(const json& c) {
  DensitySpec d;
  const auto kind = c.at("kind").get<std::string>();
  if (kind == "uniform") {
    d.kind = DensityKind::uniform;
  } else if (kind == "von_mises") {
    d.kind = DensityKind::von_mises;
  } else if (kind == "floor_mixture") {
    d.kind = DensityKind::floor_mixture;
  } else {
    throw ConfigError("density.kind must be uniform, von_mises or floor_mixture");
  }
  d.kappa = c.at("kappa").get<double>();
  d.weight = c.at("weight").get<double>();
  return d;
}

ExperimentGrid grid_from(const json& cfg, const json& g) {
  ExperimentGrid e;
  e.t_values = g.at("t_values").get<std::vector<double>>();
  e.R_per_t = g.at("R").get<double>();
  e.j_values = g.at("j_values").get<std::vector<int>>();
  e.center = g.at("center").get<double>();
  e.n_reps = g.at("n_reps").get<std::size_t>();
  const auto mode = g.at("mode").get<std::string>();
  if (mode == "poissonized") {
    e.mode = SampleCoordinates::poissonized;
  } else if (mode == "depoissonized") {
    e.mode = SampleCoordinates::depoissonized;
  } else {
    throw ConfigError("grid.mode must be poissonized or depoissonized");
  }
  e.params = params_from(cfg.at("params"));
  e.density = density_from(cfg.at("density"));
  e.seed = cfg.at("seed").get<std::uint64_t>();
  return e;
}

// ---------------------------------------------------------------- output

// Collects files and cell errors; the only place that touches the disk.
class Run {
 public:
  Run(std::string command, json config, fs::path out)
      : command_(std::move(command)), config_(std::move(config)), out_(std::move(out)) {
    std::error_code ec;
    fs::create_directories(out_, ec);
    if (ec) throw IoError("cannot create output directory " + out_.string() + ": " + ec.message());
  }

  void file(const std::string& name, const std::string& content) {
    write_text(out_ / name, content);
    files_.push_back({{"name", name}, {"bytes", content.size()}, {"fnv1a64", hex64(fnv1a64(content))}});
  }
  void csv(const std::string& name, const CsvTable& t) { file(name, t.str()); }
  void json_file(const std::string& name, const json& j) { file(name, j.dump(2) + "\n"); }

  void cell_error(const json& cell, const std::string& message) {
    errors_.push_back({{"cell", cell}, {"message", message}});
  }
  void cell_error(int j, double t, const std::string& message) { cell_error(json{{"j", j}, {"t", t}}, message); }

  const json& config() const { return config_; }
  unsigned threads() const { return config_.at("threads").get<unsigned>(); }
  std::uint64_t seed() const { return config_.at("seed").get<std::uint64_t>(); }

  int finish() {
    json_file("errors.json", json{{"errors", errors_}});
    json m{{"manifest_version", 1},
           {"tool", "circneedlet_cli"},
           {"version", kVersion},
           {"command", command_},
           {"config", config_},
           {"files", files_},
           {"replay", "circneedlet_cli " + command_ + " --config manifest.json --out <dir>"}};
    write_json(out_ / "manifest.json", m);
    if (!errors_.empty()) {
      std::cerr << json{{"errors", errors_}}.dump() << "\n";
      return 3;
    }
    return 0;
  }

 private:
  std::string command_;
  json config_;
  fs::path out_;
  json files_ = json::array();
  json errors_ = json::array();
};

void record_cell_errors(Run& run, const std::vector<CellResult>& cells) {
  for (const auto& c : cells) {
    if (!c.ok()) run.cell_error(c.j, c.t, c.error);
  }
}

// ---------------------------------------------------------------- commands

void cmd_eval(Run& run) {
  const auto& cfg = run.config();
  const auto p = params_from(cfg.at("params"));
  const auto& e = cfg.at("eval");
  const int j = e.at("j").get<int>();
  const double center = e.at("center").get<double>();
  const double lambda =
      e.at("lambda").is_null() ? 1.0 / static_cast<double>(arc_count(p, j)) : e.at("lambda").get<double>();
  const auto spec = make_spec(p, j, center, lambda);

  const auto grid = uniform_grid(e.at("points").get<std::size_t>());
  const auto psi = evaluate_needlet(spec, grid);
  CsvTable needlet({"theta", "psi"});
  for (std::size_t i = 0; i < grid.size(); ++i) needlet.add_row({grid[i], psi[i]});
  run.csv("needlet.csv", needlet);

  const auto n_w = e.at("weight_points").get<std::size_t>();
  const double x_max = e.at("weight_x_max").get<double>();
  if (n_w < 2 || !(x_max > 0.0)) throw ConfigError("eval: weight_points >= 2 and weight_x_max > 0 required");
  CsvTable weights({"x", "w"});
  for (std::size_t i = 0; i < n_w; ++i) {
    const double x = x_max * static_cast<double>(i) / static_cast<double>(n_w - 1);
    weights.add_row({x, weight(p.s, x)});
  }
  run.csv("weight.csv", weights);

  const auto fc = frame_constants(p);
  run.json_file("eval.json", {{"j", j},
                              {"center", center},
                              {"lambda", lambda},
                              {"k_max", spec.k_max()},
                              {"norm2", squared_norm_spectral(spec)},
                              {"lambda_Bs", fc.lambda_Bs},
                              {"e_s", fc.e_s}});
}

void cmd_frame_check(Run& run) {
  const auto& cfg = run.config();
  const auto p = params_from(cfg.at("params"));
  const auto& f = cfg.at("frame_check");
  const auto count = f.at("polynomials").get<std::size_t>();
  const int max_degree = f.at("max_degree").get<int>();
  const int j_min = f.at("j_min").get<int>();
  const int j_max = f.at("j_max").get<int>();
  if (max_degree < 1) throw ConfigError("frame_check.max_degree must be >= 1");
  const auto fc = frame_constants(p);

  // window-sum band over one period of log t
  const double lo = std::pow(p.B, 2.0 * 5);
  const auto wb = frame_window_bounds(p, log_grid(lo, lo * p.B * p.B, f.at("window_points").get<std::size_t>()));

  CsvTable table({"id", "degree", "ratio", "ratio_over_lambda", "error"});
  std::vector<double> ratios;
  for (std::size_t i = 0; i < count; ++i) {
    Stream rng(derive_seed(run.seed(), {tag_of(static_cast<long long>(i))}));
    const int D = 1 + static_cast<int>(rng.uniform() * max_degree) % max_degree;
    // mean-free: the constant carries no needlet energy
    auto F = TrigPolynomial::zero(D);
    for (int k = 1; k <= D; ++k) {
      const std::complex<double> a(rng.standard_normal(), rng.standard_normal());
      F.set(k, a);
      F.set(-k, std::conj(a));
    }
    try {
      const double r = frame_tightness_ratio(p, F, j_min, j_max);
      ratios.push_back(r);
      table.add_row({static_cast<long long>(i), static_cast<long long>(D), r, r / fc.lambda_Bs, std::string()});
    } catch (const Error& e) {
      const double nan = std::nan("");
      table.add_row({static_cast<long long>(i), static_cast<long long>(D), nan, nan, std::string(e.what())});
      run.cell_error(json{{"polynomial", i}}, e.what());
    }
  }
  run.csv("frame_check.csv", table);
  json summary{{"lambda_Bs", fc.lambda_Bs}, {"e_s", fc.e_s}, {"window_min", wb.m_hat}, {"window_max", wb.M_hat}};
  if (!ratios.empty()) {
    const auto [mn, mx] = std::minmax_element(ratios.begin(), ratios.end());
    summary["ratio_min"] = *mn;
    summary["ratio_max"] = *mx;
    summary["max_over_min"] = *mx / *mn;
  }
  run.json_file("frame_check.json", summary);
}

void cmd_simulate(Run& run) {
  const auto& cfg = run.config();
  const auto g = grid_from(cfg, cfg.at("grid"));
  ExperimentGrid gb = g;
  gb.compute_bounds = cfg.at("grid").at("bounds").get<bool>();
  const auto bins = cfg.at("grid").at("histogram_bins").get<std::size_t>();
  const auto cells = run_grid(gb, run.threads());
  record_cell_errors(run, cells);

  run.csv("cells.csv", cells_table(cells));
  CsvTable values({"j", "t", "rep", "value"});
  CsvTable hist({"j", "t", "center", "count"});
  json out = json::array();
  for (const auto& c : cells) {
    out.push_back(to_json(c));
    if (!c.ok()) continue;
    for (std::size_t r = 0; r < c.values.size(); ++r) {
      values.add_row({static_cast<long long>(c.j), c.t, static_cast<long long>(r), c.values[r]});
    }
    for (const auto& b : histogram(c.values, bins)) {
      hist.add_row({static_cast<long long>(c.j), c.t, b.center, static_cast<long long>(b.count)});
    }
  }
  run.csv("values.csv", values);
  run.csv("histogram.csv", hist);
  run.json_file("simulate.json", {{"cells", out}});
}

CsvTable table1_layout(std::vector<CellResult> cells) {
  // rows grouped by t, then j, as in the published table
  std::stable_sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) {
    return a.t != b.t ? a.t < b.t : a.j < b.j;
  });
  CsvTable t({"t", "j", "W", "p", "R_t", "n_reps", "mean", "var", "W1", "error"});
  const double nan = std::nan("");
  for (const auto& c : cells) {
    if (c.ok()) {
      t.add_row({c.t, static_cast<long long>(c.j), c.W, c.p_value, c.R_t, static_cast<long long>(c.n_reps), c.mean,
                 c.var, c.W1, std::string()});
    } else {
      t.add_row({c.t, static_cast<long long>(c.j), nan, nan, c.R_t, static_cast<long long>(c.n_reps), nan, nan, nan,
                 c.error});
    }
  }
  return t;
}

void cmd_reproduce_table1(Run& run) {
  const auto& cfg = run.config();
  const auto g = grid_from(cfg, cfg.at("grid"));
  const auto cells = run_grid(g, run.threads());
  record_cell_errors(run, cells);
  run.csv("table1.csv", table1_layout(cells));

  std::size_t passing = 0;
  for (const auto& c : cells) passing += c.ok() && c.p_value > 0.01;
  json summary{{"cells", cells.size()}, {"cells_p_gt_0_01", passing}};
  std::string line = "table1: " + std::to_string(passing) + "/" + std::to_string(cells.size()) +
                     " cells with p > 0.01";

  const auto& ce = cfg.at("counterexample");
  if (ce.at("enabled").get<bool>()) {
    auto gc = g;
    gc.t_values = ce.at("t_values").get<std::vector<double>>();
    gc.j_values = ce.at("j_values").get<std::vector<int>>();
    const auto counter = run_grid(gc, run.threads());
    record_cell_errors(run, counter);
    run.csv("counterexample.csv", table1_layout(counter));
    json cj = json::array();
    for (const auto& c : counter) {
      cj.push_back(to_json(c));
      if (c.ok()) line += "; counterexample (t=" + format_double(c.t) + ", j=" + std::to_string(c.j) +
                          ") p = " + format_double(c.p_value);
    }
    summary["counterexample"] = cj;
  }
  json cj = json::array();
  for (const auto& c : cells) cj.push_back(to_json(c));
  summary["table"] = cj;
  summary["summary"] = line;
  run.json_file("table1.json", summary);
  std::cout << line << "\n";
}

void cmd_bounds(Run& run) {
  const auto& cfg = run.config();
  const auto p = params_from(cfg.at("params"));
  const auto d = builtin_density(density_from(cfg.at("density")));
  const auto& b = cfg.at("bounds");
  const auto qs = b.at("q").get<std::vector<std::size_t>>();
  const double R = b.at("R").get<double>();
  if (qs.empty()) throw ConfigError("bounds.q must list at least one arc index");

  CsvTable table({"j", "t", "R_t", "d", "wasserstein_rhs", "d2_rhs", "covariance_hs_term", "triple_term",
                  "rate_term", "error"});
  json reports = json::array();
  const double nan = std::nan("");
  for (int j : b.at("j_values").get<std::vector<int>>()) {
    for (double t : b.at("t_values").get<std::vector<double>>()) {
      const double R_t = R * t;
      try {
        const auto part = make_partition(p, j);
        for (auto q : qs) {
          if (q >= part.Q) {
            throw ArgumentError("arc index " + std::to_string(q) + " out of range, level has Q = " +
                                std::to_string(part.Q));
          }
        }
        const auto ms = level_moments(p, part, qs, d);
        const BoundReport r = qs.size() == 1 ? univariate_report(qs[0], ms[0], d, R_t) : d2_rhs(qs, ms, d, R_t);
        reports.push_back(to_json(r));
        const bool multi = qs.size() >= 2;
        table.add_row({static_cast<long long>(j), t, R_t, static_cast<long long>(qs.size()), r.wasserstein_rhs,
                       multi ? r.d2_rhs : nan, multi ? r.covariance_hs_term : nan, multi ? r.triple_term : nan,
                       r.rate_term, std::string()});
      } catch (const Error& e) {
        run.cell_error(j, t, e.what());
        table.add_row({static_cast<long long>(j), t, R_t, static_cast<long long>(qs.size()), nan, nan, nan, nan, nan,
                       std::string(e.what())});
      }
    }
  }
  run.csv("bounds.csv", table);
  run.json_file("bounds.json", {{"reports", reports}});
}

void cmd_rates(Run& run) {
  const auto& cfg = run.config();
  auto g = grid_from(cfg, cfg.at("grid"));
  g.compute_bounds = true;
  const auto cells = run_grid(g, run.threads());
  record_cell_errors(run, cells);

  std::vector<RateCell> rc;
  CsvTable table({"j", "t", "R_t", "effective_n", "W1", "wasserstein_rhs", "mean", "var", "error"});
  const double nan = std::nan("");
  for (const auto& c : cells) {
    if (c.ok()) {
      rc.push_back({c.j, c.R_t, c.W1});
      table.add_row({static_cast<long long>(c.j), c.t, c.R_t, c.effective_sample_size(g.params.B), c.W1,
                     c.wasserstein_rhs.value_or(nan), c.mean, c.var, std::string()});
    } else {
      table.add_row({static_cast<long long>(c.j), c.t, c.R_t, c.effective_sample_size(g.params.B), nan, nan, nan,
                     nan, c.error});
    }
  }
  run.csv("rates.csv", table);
  json out{{"expected_slope", -0.5}};
  try {
    out["fit"] = to_json(rate_regression(rc, g.params.B));
  } catch (const Error& e) {
    run.cell_error(json{{"regression", true}}, e.what());
    out["fit_error"] = e.what();
  }
  run.json_file("rates.json", out);
}

void cmd_estimate(Run& run) {
  const auto& cfg = run.config();
  const auto p = params_from(cfg.at("params"));
  const auto d = builtin_density(density_from(cfg.at("density")));
  const auto& e = cfg.at("estimate");
  const auto n = e.at("n").get<std::size_t>();
  const auto reps = e.at("n_reps").get<std::size_t>();
  const int J0 = e.at("J0").get<int>();
  if (reps < 1) throw ConfigError("estimate.n_reps must be >= 1");

  ThresholdConfig tc = make_threshold_config(n, p.B, 2.0, J0);
  json kappa_info;
  if (e.at("kappa").is_string()) {
    if (e.at("kappa").get<std::string>() != "plugin") throw ConfigError("estimate.kappa: number or \"plugin\"");
    // pilot under the uniform law, where every needlet coefficient is zero,
    // so the pilot spread is pure sampling noise at level j*
    const auto& pc = e.at("pilot");
    const int j_star = pc.at("level").is_null() ? tc.Jn : pc.at("level").get<int>();
    const auto pilot_reps = pc.at("reps").get<std::size_t>();
    const auto spec = make_spec(p, make_partition(p, j_star), 0);
    const auto u = uniform_density();
    std::vector<double> pilot(pilot_reps);
    parallel_for(pilot_reps, run.threads(), [&](std::size_t r) {
      pilot[r] = empirical_coefficient(spec, sample_iid(u, n, derive_seed(run.seed(), {0x70696c6fULL, r})));
    });
    tc.kappa = plugin_kappa(pilot, tc.tau_n, pc.at("quantile").get<double>());
    kappa_info = {{"rule", "plugin"}, {"level", j_star}, {"pilot_reps", pilot_reps}};
  } else {
    tc.kappa = e.at("kappa").get<double>();
    if (!(tc.kappa >= 0.0)) throw ConfigError("estimate.kappa must be nonnegative");
    kappa_info = {{"rule", "fixed"}};
  }

  std::vector<double> losses(reps), masses(reps);
  std::vector<std::size_t> kept(reps);
  std::optional<DensityEstimate> first;
  parallel_for(reps, run.threads(), [&](std::size_t r) {
    auto est = estimate_density(sample_iid(d, n, derive_seed(run.seed(), {r})), p, tc);
    losses[r] = mise(est, d);
    masses[r] = estimate_mass(est);
    kept[r] = est.coefficients.size();
    if (r == 0) first = std::move(est);
  });

  const auto grid = uniform_grid(e.at("grid_points").get<std::size_t>());
  const auto fhat = first->on_grid(grid);
  CsvTable curve({"theta", "F_hat", "truth"});
  for (std::size_t i = 0; i < grid.size(); ++i) curve.add_row({grid[i], fhat[i], d(grid[i])});
  run.csv("estimate.csv", curve);

  CsvTable per_rep({"rep", "mise", "mass", "surviving"});
  for (std::size_t r = 0; r < reps; ++r) {
    per_rep.add_row({static_cast<long long>(r), losses[r], masses[r], static_cast<long long>(kept[r])});
  }
  run.csv("mise.csv", per_rep);

  json coeffs = json::array();
  for (const auto& c : first->coefficients) {
    coeffs.push_back({{"j", c.j}, {"q", c.q}, {"center", c.spec.center}, {"beta", c.beta}});
  }
  run.json_file("coefficients.json", {{"lambda_Bs", first->lambda_Bs}, {"coefficients", coeffs}});

  std::vector<double> sorted = losses;
  std::sort(sorted.begin(), sorted.end());
  const double med = reps % 2 ? sorted[reps / 2] : 0.5 * (sorted[reps / 2 - 1] + sorted[reps / 2]);
  std::size_t mass_ok = 0;
  for (double m : masses) mass_ok += std::fabs(m - 1.0) < 0.02;
  run.json_file("estimate.json", {{"n", n},
                                  {"n_reps", reps},
                                  {"density", d.id},
                                  {"kappa", tc.kappa},
                                  {"kappa_rule", kappa_info},
                                  {"tau_n", tc.tau_n},
                                  {"threshold", tc.threshold()},
                                  {"J0", tc.J0},
                                  {"Jn", tc.Jn},
                                  {"median_mise", med},
                                  {"constant_mise", constant_estimator_mise(d)},
                                  {"mass_within_0_02", mass_ok}});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mexican needlets on the circle: evaluation, simulation, bounds and estimation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Flags flags;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"eval", "needlet and weight function on a grid"},
      {"frame-check", "near-tightness ratios for random trig polynomials"},
      {"simulate", "Monte Carlo grid of compensated coefficients"},
      {"reproduce-table1", "Shapiro-Wilk table over the default grid plus the counterexample cells"},
      {"bounds", "Wasserstein and d2 bound reports"},
      {"rates", "rate regression of empirical W1 against B^-j R_t"},
      {"estimate", "thresholded needlet density estimate"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config, "YAML/JSON config or an earlier manifest.json")->check(CLI::ExistingFile);
    sub->add_option("--out", flags.out, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "root seed");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--cell", flags.cell, "single-cell override, j=..,t=..");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  const auto* sub = app.get_subcommands().front();
  if (sub->count("--seed")) flags.seed = seed;
  if (sub->count("--threads")) flags.threads = threads;

  try {
    Run run(cmd, resolve_config(cmd, flags), flags.out);
    if (cmd == "eval") {
      cmd_eval(run);
    } else if (cmd == "frame-check") {
      cmd_frame_check(run);
    } else if (cmd == "simulate") {
      cmd_simulate(run);
    } else if (cmd == "reproduce-table1") {
      cmd_reproduce_table1(run);
    } else if (cmd == "bounds") {
      cmd_bounds(run);
    } else if (cmd == "rates") {
      cmd_rates(run);
    } else {
      cmd_estimate(run);
    }
    return run.finish();
  } catch (const ConfigError& e) {
    std::cerr << json{{"errors", {{{"fatal", "config"}, {"message", e.what()}}}}}.dump() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << json{{"errors", {{{"fatal", "config"}, {"message", e.what()}}}}}.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << json{{"errors", {{{"fatal", "run"}, {"message", e.what()}}}}}.dump() << "\n";
    return 1;
  }
}
