#pragma once

// Run configuration (strict JSON schema), CSV/JSON emitters and the
// subcommand drivers behind the `parabolicity` tool.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "parabolicity/comparison_engine.hpp"
#include "parabolicity/curvature_profiles.hpp"
#include "parabolicity/errors.hpp"
#include "parabolicity/growth_analysis.hpp"
#include "parabolicity/model_manifold_oracle.hpp"

namespace parabolicity {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// RunConfig
// ---------------------------------------------------------------------------

struct Tolerances {
  double ode_tol = 1e-10;
  double fit_margin = 0.02;
  double stability = 0.05;
  double log_factor = 10.0;
  double slope_tolerance = 1e-3;

  friend bool operator==(const Tolerances&, const Tolerances&) = default;
};

/// Geometric p grid "p=from:to:count".
struct PSweep {
  double from = 1.01;
  double to = 20.0;
  std::size_t count = 64;

  friend bool operator==(const PSweep&, const PSweep&) = default;
};

struct SweepGrid {
  std::string family = "power";  // power | two_exponent | sech2
  std::vector<double> alpha{0.5, 1.0, 2.0};
  std::vector<int> n{2, 3, 5};
  double epsilon = 1.0;  // two_exponent only

  friend bool operator==(const SweepGrid&, const SweepGrid&) = default;
};

struct ValidationCase {
  std::string model = "hyperbolic";  // euclidean | hyperbolic | sphere | custom
  double k = 1.0;
  double r_end = 5.0;
  std::string csv;  // custom only: columns r, sigma, dsigma, d2sigma
  ProfileSpec profile;

  friend bool operator==(const ValidationCase&, const ValidationCase&) = default;
};

struct OutputSpec {
  std::string dir = "out";
  bool csv = true;
  bool json = true;

  friend bool operator==(const OutputSpec&, const OutputSpec&) = default;
};

struct RunConfig {
  ProfileSpec profile;
  int n = 3;
  GridSpec grid;
  Tolerances tolerances;
  std::optional<Window> window;
  std::vector<double> p;
  std::optional<PSweep> p_sweep;
  std::optional<SweepGrid> sweep;
  std::vector<ValidationCase> validate;
  OutputSpec output;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

  /// Requested p values: the explicit list followed by the sweep grid.
  std::vector<double> p_values() const {
    std::vector<double> out = p;
    if (p_sweep) {
      const double ratio =
          p_sweep->count > 1 ? std::pow(p_sweep->to / p_sweep->from, 1.0 / static_cast<double>(p_sweep->count - 1))
                             : 1.0;
      for (std::size_t k = 0; k < p_sweep->count; ++k) {
        out.push_back(k + 1 == p_sweep->count && p_sweep->count > 1
                          ? p_sweep->to
                          : p_sweep->from * std::pow(ratio, static_cast<double>(k)));
      }
    }
    return out;
  }

  CertifyOptions certify_options() const {
    CertifyOptions o;
    o.grid = grid;
    o.ode_tol = tolerances.ode_tol;
    o.classifier = {tolerances.fit_margin, tolerances.log_factor, tolerances.slope_tolerance};
    o.stability_threshold = tolerances.stability;
    o.window = window;
    o.p_values = p_values();
    return o;
  }
};

namespace detail {

class SchemaReader {
 public:
  SchemaReader(const Json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("config key '" + (path_.empty() ? std::string("<root>") : path_) + "': " + msg);
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const {
    seen_.insert(key);
    return obj_.contains(key);
  }

  const Json& raw(const std::string& key) const {
    seen_.insert(key);
    if (!obj_.contains(key)) throw ConfigError("config key '" + child(key) + "': missing");
    return obj_.at(key);
  }

  double number(const std::string& key) const {
    const Json& v = raw(key);
    if (!v.is_number()) throw ConfigError("config key '" + child(key) + "': expected a number");
    return v.get<double>();
  }

  double number_or(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }

  std::string string(const std::string& key) const {
    const Json& v = raw(key);
    if (!v.is_string()) throw ConfigError("config key '" + child(key) + "': expected a string");
    return v.get<std::string>();
  }

  int integer(const std::string& key) const {
    const Json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError("config key '" + child(key) + "': expected an integer");
    return v.get<int>();
  }

  std::vector<double> numbers(const std::string& key) const {
    const Json& v = raw(key);
    if (!v.is_array()) throw ConfigError("config key '" + child(key) + "': expected an array");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError("config key '" + child(key) + "': expected numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  /// Rejects keys that were never consulted.
  void finish() const {
    for (const auto& [key, _] : obj_.items()) {
      if (!seen_.count(key)) throw ConfigError("config key '" + child(key) + "': unknown key");
    }
  }

 private:
  const Json& obj_;
  std::string path_;
  mutable std::set<std::string> seen_;
};

inline ProfileSpec parse_profile(const Json& j, const std::string& path) {
  SchemaReader in(j, path);
  ProfileSpec spec;
  const std::string family = in.string("family");
  if (family == "constant") {
    spec.family = Constant{in.number("value")};
  } else if (family == "sech2") {
    spec.family = Sech2Decay{in.number("alpha")};
    if (in.has("delta")) spec.delta = in.number("delta");
  } else if (family == "k_delta") {
    spec.family = KDelta{in.number("delta")};
  } else if (family == "power") {
    spec.family = PowerDecay{in.number("alpha")};
    if (in.has("domain_start")) spec.domain_start = in.number("domain_start");
  } else if (family == "two_exponent") {
    spec.family = TwoExponent{in.number("alpha"), in.number("epsilon")};
    if (in.has("domain_start")) spec.domain_start = in.number("domain_start");
  } else if (family == "tabulated") {
    const Json& samples = in.raw("samples");
    if (!samples.is_array()) in.fail("samples must be an array of [r, K] pairs");
    Tabulated tab;
    for (const auto& row : samples) {
      if (!row.is_array() || row.size() != 2 || !row[0].is_number() || !row[1].is_number()) {
        throw ConfigError("config key '" + in.child("samples") + "': each sample must be [r, K]");
      }
      tab.r.push_back(row[0].get<double>());
      tab.k.push_back(row[1].get<double>());
    }
    spec.family = std::move(tab);
  } else {
    throw ConfigError("config key '" + in.child("family") + "': unknown family '" + family + "'");
  }
  if (in.has("glue")) {
    SchemaReader g(in.raw("glue"), in.child("glue"));
    spec.glue = GlueSpec{g.number("B"), g.number("R")};
    g.finish();
  }
  if (in.has("normalization")) {
    const std::string norm = in.string("normalization");
    if (norm == "per_direction") {
      spec.normalization = Normalization::PerDirection;
    } else if (norm == "total") {
      spec.normalization = Normalization::Total;
    } else {
      throw ConfigError("config key '" + in.child("normalization") + "': expected per_direction or total");
    }
  }
  in.finish();
  return spec;
}

inline Json profile_to_json(const ProfileSpec& spec) {
  Json j;
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Constant>) {
          j["family"] = "constant";
          j["value"] = f.value;
        } else if constexpr (std::is_same_v<T, Sech2Decay>) {
          j["family"] = "sech2";
          j["alpha"] = f.alpha;
        } else if constexpr (std::is_same_v<T, KDelta>) {
          j["family"] = "k_delta";
          j["delta"] = f.delta;
        } else if constexpr (std::is_same_v<T, PowerDecay>) {
          j["family"] = "power";
          j["alpha"] = f.alpha;
        } else if constexpr (std::is_same_v<T, TwoExponent>) {
          j["family"] = "two_exponent";
          j["alpha"] = f.alpha;
          j["epsilon"] = f.epsilon;
        } else {
          j["family"] = "tabulated";
          Json samples = Json::array();
          for (std::size_t i = 0; i < f.r.size(); ++i) samples.push_back(Json::array({f.r[i], f.k[i]}));
          j["samples"] = std::move(samples);
        }
      },
      spec.family);
  if (spec.delta && std::holds_alternative<Sech2Decay>(spec.family)) j["delta"] = *spec.delta;
  if (spec.domain_start) j["domain_start"] = *spec.domain_start;
  if (spec.glue) j["glue"] = Json{{"B", spec.glue->core_bound}, {"R", spec.glue->glue_start}};
  j["normalization"] = spec.normalization == Normalization::Total ? "total" : "per_direction";
  return j;
}

inline PSweep parse_p_sweep_string(const std::string& text) {
  // "p=from:to:count"
  std::string body = text;
  if (body.rfind("p=", 0) == 0) body = body.substr(2);
  std::stringstream ss(body);
  std::string a, b, c;
  if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, c)) {
    throw ConfigError("sweep spec must look like p=from:to:count, got '" + text + "'");
  }
  try {
    PSweep s{std::stod(a), std::stod(b), static_cast<std::size_t>(std::stoul(c))};
    return s;
  } catch (const std::exception&) {
    throw ConfigError("sweep spec must look like p=from:to:count, got '" + text + "'");
  }
}

inline std::pair<std::size_t, std::size_t> line_and_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace detail

inline void validate_config(const RunConfig& c) {
  if (c.n < 2) throw ConfigError("config key 'n': dimension must be an integer >= 2");
  const Tolerances& t = c.tolerances;
  for (double v : {t.ode_tol, t.fit_margin, t.stability, t.log_factor, t.slope_tolerance}) {
    if (!(v > 0.0)) throw ConfigError("config key 'tolerances': all tolerances must be positive");
  }
  if (t.ode_tol < kMinOdeTolerance || t.ode_tol > kMaxOdeTolerance) {
    throw ConfigError("config key 'tolerances.ode_tol': must lie in [1e-12, 1e-4]");
  }
  for (double p : c.p) {
    if (!(p > 1.0)) throw ConfigError("config key 'p': every p must be > 1");
  }
  if (c.p_sweep && (!(c.p_sweep->from > 1.0) || !(c.p_sweep->to >= c.p_sweep->from) || c.p_sweep->count < 1)) {
    throw ConfigError("config key 'p_sweep': need 1 < from <= to and count >= 1");
  }
  if (!(c.grid.r_max > 0.0) || c.grid.nodes < 5) {
    throw ConfigError("config key 'grid': need r_max > 0 and nodes >= 5");
  }
  if (c.output.dir.empty()) throw ConfigError("config key 'output.dir': must not be empty");
}

/// Parses a JSON run config. Syntax errors report line and column; schema
/// errors report the dotted key path. Unknown keys are rejected everywhere.
inline RunConfig parse_config(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = detail::line_and_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ConfigError("config syntax error at line " + std::to_string(line) + ", column " + std::to_string(col) +
                      ": " + e.what());
  }
  detail::SchemaReader in(root, "");
  RunConfig c;
  c.profile = detail::parse_profile(in.raw("profile"), "profile");
  c.n = in.integer("n");
  if (in.has("r_max")) c.grid.r_max = in.number("r_max");
  if (in.has("grid")) {
    detail::SchemaReader g(in.raw("grid"), "grid");
    if (g.has("kind")) {
      const std::string kind = g.string("kind");
      if (kind == "uniform") {
        c.grid.kind = GridKind::Uniform;
      } else if (kind == "stretched") {
        c.grid.kind = GridKind::Stretched;
      } else {
        g.fail("kind must be uniform or stretched");
      }
    }
    if (g.has("nodes")) c.grid.nodes = static_cast<std::size_t>(std::max(0, g.integer("nodes")));
    c.grid.first_spacing = g.number_or("first_spacing", c.grid.first_spacing);
    g.finish();
  }
  if (in.has("tolerances")) {
    detail::SchemaReader t(in.raw("tolerances"), "tolerances");
    c.tolerances.ode_tol = t.number_or("ode_tol", c.tolerances.ode_tol);
    c.tolerances.fit_margin = t.number_or("fit_margin", c.tolerances.fit_margin);
    c.tolerances.stability = t.number_or("stability", c.tolerances.stability);
    c.tolerances.log_factor = t.number_or("log_factor", c.tolerances.log_factor);
    c.tolerances.slope_tolerance = t.number_or("slope_tolerance", c.tolerances.slope_tolerance);
    t.finish();
  }
  if (in.has("window")) {
    const auto w = in.numbers("window");
    if (w.size() != 2) throw ConfigError("config key 'window': expected [lo, hi]");
    c.window = Window{w[0], w[1]};
  }
  if (in.has("p")) c.p = in.numbers("p");
  if (in.has("p_sweep")) {
    detail::SchemaReader s(in.raw("p_sweep"), "p_sweep");
    c.p_sweep = PSweep{s.number("from"), s.number("to"), static_cast<std::size_t>(std::max(0, s.integer("count")))};
    s.finish();
  }
  if (in.has("sweep")) {
    detail::SchemaReader s(in.raw("sweep"), "sweep");
    SweepGrid sg;
    if (s.has("family")) sg.family = s.string("family");
    if (sg.family != "power" && sg.family != "two_exponent" && sg.family != "sech2") {
      s.fail("family must be power, two_exponent or sech2");
    }
    if (s.has("alpha")) sg.alpha = s.numbers("alpha");
    if (s.has("n")) {
      sg.n.clear();
      for (double v : s.numbers("n")) {
        if (v != std::floor(v) || v < 2) throw ConfigError("config key 'sweep.n': dimensions must be integers >= 2");
        sg.n.push_back(static_cast<int>(v));
      }
    }
    sg.epsilon = s.number_or("epsilon", sg.epsilon);
    s.finish();
    c.sweep = sg;
  }
  if (in.has("validate")) {
    const Json& cases = in.raw("validate");
    if (!cases.is_array()) throw ConfigError("config key 'validate': expected an array");
    for (std::size_t i = 0; i < cases.size(); ++i) {
      const std::string path = "validate[" + std::to_string(i) + "]";
      detail::SchemaReader v(cases[i], path);
      ValidationCase vc;
      vc.model = v.string("model");
      if (vc.model != "euclidean" && vc.model != "hyperbolic" && vc.model != "sphere" && vc.model != "custom") {
        v.fail("model must be euclidean, hyperbolic, sphere or custom");
      }
      vc.k = v.number_or("k", vc.k);
      vc.r_end = v.number_or("r_end", vc.r_end);
      if (v.has("csv")) vc.csv = v.string("csv");
      if (vc.model == "custom" && vc.csv.empty()) v.fail("custom models need a csv path");
      vc.profile = detail::parse_profile(v.raw("profile"), path + ".profile");
      v.finish();
      c.validate.push_back(std::move(vc));
    }
  }
  if (in.has("output")) {
    detail::SchemaReader o(in.raw("output"), "output");
    if (o.has("dir")) c.output.dir = o.string("dir");
    if (o.has("formats")) {
      const Json& f = o.raw("formats");
      if (!f.is_array()) o.fail("formats must be an array of \"csv\" / \"json\"");
      c.output.csv = c.output.json = false;
      for (const auto& e : f) {
        const std::string s = e.is_string() ? e.get<std::string>() : "";
        if (s == "csv") {
          c.output.csv = true;
        } else if (s == "json") {
          c.output.json = true;
        } else {
          o.fail("formats entries must be \"csv\" or \"json\"");
        }
      }
    }
    o.finish();
  }
  in.finish();
  validate_config(c);
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Full config with every default spelled out; re-parses to an equal RunConfig.
inline Json config_to_json(const RunConfig& c) {
  Json j;
  j["profile"] = detail::profile_to_json(c.profile);
  j["n"] = c.n;
  j["r_max"] = c.grid.r_max;
  j["grid"] = Json{{"kind", to_string(c.grid.kind)},
                   {"nodes", c.grid.nodes},
                   {"first_spacing", c.grid.first_spacing}};
  j["tolerances"] = Json{{"ode_tol", c.tolerances.ode_tol},
                         {"fit_margin", c.tolerances.fit_margin},
                         {"stability", c.tolerances.stability},
                         {"log_factor", c.tolerances.log_factor},
                         {"slope_tolerance", c.tolerances.slope_tolerance}};
  if (c.window) j["window"] = Json::array({c.window->lo, c.window->hi});
  j["p"] = c.p;
  if (c.p_sweep) j["p_sweep"] = Json{{"from", c.p_sweep->from}, {"to", c.p_sweep->to}, {"count", c.p_sweep->count}};
  if (c.sweep) {
    j["sweep"] = Json{{"family", c.sweep->family},
                      {"alpha", c.sweep->alpha},
                      {"n", c.sweep->n},
                      {"epsilon", c.sweep->epsilon}};
  }
  if (!c.validate.empty()) {
    Json cases = Json::array();
    for (const auto& v : c.validate) {
      Json e{{"model", v.model}, {"k", v.k}, {"r_end", v.r_end}};
      if (!v.csv.empty()) e["csv"] = v.csv;
      e["profile"] = detail::profile_to_json(v.profile);
      cases.push_back(std::move(e));
    }
    j["validate"] = std::move(cases);
  }
  Json formats = Json::array();
  if (c.output.csv) formats.push_back("csv");
  if (c.output.json) formats.push_back("json");
  j["output"] = Json{{"dir", c.output.dir}, {"formats", formats}};
  return j;
}

// ---------------------------------------------------------------------------
// Emitters
// ---------------------------------------------------------------------------

/// Comma-separated, one header row, LF endings, 17 significant digits.
inline void write_csv(std::ostream& out, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& columns) {
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  const std::size_t rows = columns.empty() ? 0 : columns.front().size();
  std::ostringstream cell;
  cell << std::setprecision(17);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      cell.str("");
      cell << columns[c][r];
      out << (c ? "," : "") << cell.str();
    }
    out << '\n';
  }
}

inline void write_solution_csv(std::ostream& out, const ComparisonSolution& sol) {
  write_csv(out, {"r", "phi", "dphi"}, {sol.grid, sol.phi, sol.dphi});
}

inline void write_volume_csv(std::ostream& out, const VolumeBound& vb) {
  write_csv(out, {"r", "vbar", "dvbar"}, {vb.grid, vb.vbar, vb.dvbar});
}

/// Reads a custom warped-model table with header r,sigma,dsigma,d2sigma.
inline CustomWarp read_model_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("model csv is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "r,sigma,dsigma,d2sigma") {
    throw ConfigError("model csv header must be r,sigma,dsigma,d2sigma, got '" + line + "'");
  }
  CustomWarp w;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    double v[4];
    for (int c = 0; c < 4; ++c) {
      if (!std::getline(ss, cell, ',')) {
        throw ConfigError("model csv line " + std::to_string(lineno) + ": expected 4 columns");
      }
      try {
        v[c] = std::stod(cell);
      } catch (const std::exception&) {
        throw ConfigError("model csv line " + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    w.r.push_back(v[0]);
    w.sigma.push_back(v[1]);
    w.dsigma.push_back(v[2]);
    w.d2sigma.push_back(v[3]);
  }
  return w;
}

inline Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline Json certificate_to_json(const ParabolicityCertificate& cert) {
  Json j;
  j["profile"] = cert.profile;
  j["n"] = cert.dimension;
  j["gamma_hat"] = cert.growth.exponent;
  j["drift"] = cert.growth.drift;
  j["p_star"] = optional_number(cert.threshold);
  j["criterion_used"] = to_string(cert.criterion_used);
  Json verdicts = Json::array();
  for (const auto& v : cert.verdicts) {
    verdicts.push_back(Json{{"p", v.p}, {"verdict", to_string(v.verdict)}, {"form", to_string(v.form)}});
  }
  j["verdicts"] = std::move(verdicts);

  const CertificateAudit& a = cert.audit;
  Json audit;
  audit["comparison_profile"] = a.comparison_profile;
  audit["glue_start"] = optional_number(a.glue_start);
  audit["blend_floor"] = optional_number(a.blend_floor);
  audit["delta"] = optional_number(a.delta);
  audit["domination_radius"] = optional_number(a.domination_radius);
  audit["solve"] = Json{{"grid_kind", to_string(a.grid.kind)},
                        {"grid_nodes", a.grid_nodes},
                        {"r_max", a.grid.r_max},
                        {"ode_tol", a.ode_tol},
                        {"accepted_steps", a.accepted_steps},
                        {"rejected_steps", a.rejected_steps},
                        {"residual", a.ode_residual},
                        {"relative_residual", a.ode_relative_residual}};
  audit["volume"] = Json{{"richardson_error", a.richardson_error}};
  audit["growth"] = Json{{"window", Json::array({a.window.lo, a.window.hi})},
                         {"intercept", cert.growth.intercept},
                         {"fit_residual", a.fit_residual},
                         {"stability_threshold", a.stability_threshold},
                         {"unstable", cert.growth.unstable}};
  audit["classifier"] = Json{{"margin", a.classifier.margin},
                             {"log_factor", a.classifier.log_factor},
                             {"slope_tolerance", a.classifier.slope_tolerance}};
  if (a.tail_dominance) {
    audit["tail_dominance"] = Json{{"beta", a.tail_dominance->beta},
                                   {"attained_at", a.tail_dominance->attained_at},
                                   {"trend_rate", a.tail_dominance->trend_rate},
                                   {"stabilizing", a.tail_dominance->stabilizing}};
  } else {
    audit["tail_dominance"] = nullptr;
  }
  Json per_p = Json::array();
  for (const auto& v : cert.verdicts) {
    per_p.push_back(Json{{"p", v.p},
                         {"volume_slope", v.volume.slope},
                         {"volume", to_string(v.volume.verdict)},
                         {"volume_escalated", v.volume.escalated},
                         {"derivative_slope", v.derivative.slope},
                         {"derivative", to_string(v.derivative.verdict)},
                         {"derivative_escalated", v.derivative.escalated}});
  }
  audit["criteria"] = std::move(per_p);
  j["audit"] = std::move(audit);
  return j;
}

/// 0 if every requested p is certified, 2 otherwise.
inline int certify_exit_code(const ParabolicityCertificate& cert) {
  const bool all = std::all_of(cert.verdicts.begin(), cert.verdicts.end(),
                               [](const PVerdict& v) { return v.verdict == Verdict::Certified; });
  return all ? 0 : 2;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

namespace detail {

inline std::filesystem::path prepare_output(const RunConfig& c) {
  std::filesystem::path dir(c.output.dir);
  std::filesystem::create_directories(dir);
  std::ofstream echo(dir / "config.json");
  echo << config_to_json(c).dump(2) << '\n';
  return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

}  // namespace detail

struct CommandResult {
  int exit_code = 0;
  std::string summary;
};

inline CommandResult cmd_certify(const RunConfig& c) {
  const auto dir = detail::prepare_output(c);
  const ParabolicityCertificate cert = certify(c.profile, c.n, c.certify_options());
  if (c.output.json) detail::write_text(dir / "certificate.json", certificate_to_json(cert).dump(2) + "\n");
  if (c.output.csv) {
    const BuiltProfile built = build_comparison_profile(c.profile, c.n);
    const ComparisonSolution sol = solve_comparison_ode(built.profile, c.grid, c.tolerances.ode_tol);
    std::ostringstream s, v;
    write_solution_csv(s, sol);
    write_volume_csv(v, volume_upper_bound(sol, c.n));
    detail::write_text(dir / "solution.csv", s.str());
    detail::write_text(dir / "volume.csv", v.str());
  }
  std::ostringstream msg;
  msg << std::setprecision(6) << "gamma_hat=" << cert.growth.exponent << " p_star=";
  if (cert.threshold) {
    msg << *cert.threshold;
  } else {
    msg << "none";
  }
  for (const auto& v : cert.verdicts) msg << "\n  p=" << v.p << " " << to_string(v.verdict) << " (" << to_string(v.form) << ")";
  return {certify_exit_code(cert), msg.str()};
}

inline CommandResult cmd_solve(const RunConfig& c) {
  const auto dir = detail::prepare_output(c);
  const BuiltProfile built = build_comparison_profile(c.profile, c.n);
  const ComparisonSolution sol = solve_comparison_ode(built.profile, c.grid, c.tolerances.ode_tol);
  std::ostringstream s;
  write_solution_csv(s, sol);
  detail::write_text(dir / "solution.csv", s.str());
  std::ostringstream msg;
  msg << std::setprecision(17) << "nodes=" << sol.grid.size() << " residual=" << residual(sol, built.profile);
  if (sol.first_zero) msg << " first_zero=" << *sol.first_zero;
  return {0, msg.str()};
}

inline CommandResult cmd_volume(const RunConfig& c) {
  const auto dir = detail::prepare_output(c);
  const BuiltProfile built = build_comparison_profile(c.profile, c.n);
  const ComparisonSolution sol = solve_comparison_ode(built.profile, c.grid, c.tolerances.ode_tol);
  const VolumeBound vb = volume_upper_bound(sol, c.n);
  std::ostringstream v;
  write_volume_csv(v, vb);
  detail::write_text(dir / "volume.csv", v.str());
  std::ostringstream msg;
  msg << std::setprecision(17) << "vbar(r_max)=" << vb.vbar.back() << " richardson_error=" << vb.richardson_error;
  return {0, msg.str()};
}

struct SweepRow {
  double alpha = 0.0;
  int n = 2;
  std::optional<double> numeric;
  double analytic = 0.0;
};

/// Numeric vs analytic threshold across (alpha, n); rows run concurrently and
/// are written in grid order.
inline std::vector<SweepRow> run_sweep(const RunConfig& c) {
  const SweepGrid sg = c.sweep.value_or(SweepGrid{});
  std::vector<std::future<SweepRow>> jobs;
  for (double alpha : sg.alpha) {
    for (int n : sg.n) {
      jobs.push_back(std::async(std::launch::async, [&c, &sg, alpha, n] {
        ProfileSpec spec = c.profile;
        spec.delta.reset();
        spec.domain_start.reset();
        if (sg.family == "power") {
          spec.family = PowerDecay{alpha};
        } else if (sg.family == "two_exponent") {
          spec.family = TwoExponent{alpha, sg.epsilon};
        } else {
          spec.family = Sech2Decay{alpha};
        }
        if (!spec.glue) spec.glue = GlueSpec{sg.family == "sech2" ? 0.0 : -5.0, 2.0};
        CertifyOptions opts = c.certify_options();
        opts.p_values.clear();
        const ParabolicityCertificate cert = certify(spec, n, opts);
        return SweepRow{alpha, n, cert.threshold, analytic_threshold(spec.family, n)};
      }));
    }
  }
  std::vector<SweepRow> rows;
  for (auto& j : jobs) rows.push_back(j.get());
  return rows;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "alpha,n,p_star_numeric,p_star_analytic,gap\n";
  std::ostringstream cell;
  cell << std::setprecision(17);
  const auto num = [&](double v) {
    cell.str("");
    cell << v;
    return cell.str();
  };
  for (const auto& r : rows) {
    out << num(r.alpha) << ',' << r.n << ',' << (r.numeric ? num(*r.numeric) : "nan") << ',' << num(r.analytic)
        << ',' << (r.numeric ? num(std::abs(*r.numeric - r.analytic)) : "nan") << '\n';
  }
}

inline CommandResult cmd_sweep(const RunConfig& c) {
  const auto dir = detail::prepare_output(c);
  const auto rows = run_sweep(c);
  std::ostringstream s;
  write_sweep_csv(s, rows);
  detail::write_text(dir / "sweep.csv", s.str());
  return {0, s.str()};
}

struct ValidationOutcome {
  std::string name;
  ComparisonReport report;
};

inline std::vector<ValidationOutcome> run_validation(const RunConfig& c) {
  std::vector<ValidationOutcome> out;
  const int n = c.n;
  const double tol = c.tolerances.ode_tol;
  const auto run = [&](const std::string& name, const WarpedModel& model, const AnyProfile& profile) {
    const auto sol = solve_comparison_ode(profile, uniform_grid(model.r_end(), c.grid.nodes), tol);
    out.push_back({name, verify_comparison(model, profile, sol)});
  };
  if (c.validate.empty()) {
    run("hyperbolic_equality", WarpedModel::hyperbolic(n, 5.0), AnyProfile(RadialCurvatureProfile::constant(-1.0)));
    run("hyperbolic_weakened", WarpedModel::hyperbolic(n, 5.0), AnyProfile(RadialCurvatureProfile::constant(-2.0)));
    const AnyProfile glued(GluedProfile(-5.0, 2.0, RadialCurvatureProfile(PowerDecay{1.0})));
    const auto sol = solve_comparison_ode(glued, uniform_grid(10.0, c.grid.nodes), tol);
    const WarpedModel self = WarpedModel::from_solution(sol, glued, n);
    out.push_back({"self_consistency", verify_comparison(self, glued, sol)});
    return out;
  }
  for (std::size_t i = 0; i < c.validate.size(); ++i) {
    const ValidationCase& vc = c.validate[i];
    const AnyProfile profile = build_comparison_profile(vc.profile, n).profile;
    const std::string name = "case" + std::to_string(i) + "_" + vc.model;
    if (vc.model == "custom") {
      std::ifstream in(vc.csv);
      if (!in) throw ConfigError("cannot open model csv " + vc.csv);
      const WarpedModel model(read_model_csv(in), n, vc.r_end);
      run(name, model, profile);
    } else if (vc.model == "euclidean") {
      run(name, WarpedModel::euclidean(n, vc.r_end), profile);
    } else if (vc.model == "hyperbolic") {
      run(name, WarpedModel::hyperbolic(n, vc.r_end, vc.k), profile);
    } else {
      run(name, WarpedModel::sphere(n, vc.r_end, vc.k), profile);
    }
  }
  return out;
}

inline CommandResult cmd_validate(const RunConfig& c) {
  const auto dir = detail::prepare_output(c);
  const auto outcomes = run_validation(c);
  Json cases = Json::array();
  bool all = true;
  std::ostringstream msg;
  for (const auto& o : outcomes) {
    all = all && o.report.holds;
    cases.push_back(Json{{"case", o.name},
                         {"model", o.report.model},
                         {"holds", o.report.holds},
                         {"nodes_checked", o.report.nodes_checked},
                         {"max_sigma_excess", o.report.max_sigma_excess},
                         {"max_volume_excess", o.report.max_volume_excess},
                         {"max_relative_gap", o.report.max_relative_gap},
                         {"tolerance", o.report.tolerance}});
    msg << o.name << ": " << (o.report.holds ? "holds" : "FAILS") << '\n';
  }
  detail::write_text(dir / "validation.json", Json{{"cases", cases}}.dump(2) + "\n");
  return {all ? 0 : 2, msg.str()};
}

}  // namespace parabolicity
