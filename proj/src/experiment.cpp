#include "tailrisk/experiment.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <sstream>

namespace tailrisk {

namespace {

// Strict reader over one JSON object: every key must be consumed.
class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  const Json& req(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) throw ConfigError(at(key) + ": missing required key");
    return j_.at(key);
  }

  const Json* opt(const std::string& key) {
    seen_.insert(key);
    return has(key) ? &j_.at(key) : nullptr;
  }

  double number(const std::string& key) { return as_number(req(key), at(key)); }
  double number(const std::string& key, double def) {
    const Json* v = opt(key);
    return v ? as_number(*v, at(key)) : def;
  }

  std::uint64_t count(const std::string& key, std::uint64_t def) {
    const Json* v = opt(key);
    if (!v) return def;
    const double d = as_number(*v, at(key));
    if (!(d >= 0.0) || d != std::floor(d) || d > 1.8e19) throw ConfigError(at(key) + ": expected a non-negative integer");
    return v->is_number_unsigned() ? v->get<std::uint64_t>() : static_cast<std::uint64_t>(d);
  }

  std::string str(const std::string& key) {
    const Json& v = req(key);
    if (!v.is_string()) throw ConfigError(at(key) + ": expected a string");
    return v.get<std::string>();
  }
  std::string str(const std::string& key, const std::string& def) {
    const Json* v = opt(key);
    if (!v) return def;
    if (!v->is_string()) throw ConfigError(at(key) + ": expected a string");
    return v->get<std::string>();
  }

  bool boolean(const std::string& key, bool def) {
    const Json* v = opt(key);
    if (!v) return def;
    if (!v->is_boolean()) throw ConfigError(at(key) + ": expected true or false");
    return v->get<bool>();
  }

  std::vector<double> numbers(const std::string& key) { return as_numbers(req(key), at(key)); }

  const Json& array(const std::string& key) {
    const Json& v = req(key);
    if (!v.is_array()) throw ConfigError(at(key) + ": expected an array");
    return v;
  }

  std::string at(const std::string& key) const { return path_ + "." + key; }
  const std::string& path() const { return path_; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown key '" + at(key) + "'");
    }
  }

  static double as_number(const Json& v, const std::string& where) {
    if (!v.is_number()) throw ConfigError(where + ": expected a number");
    return v.get<double>();
  }

  static std::vector<double> as_numbers(const Json& v, const std::string& where) {
    if (!v.is_array()) throw ConfigError(where + ": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], where + "[" + std::to_string(i) + "]"));
    return out;
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string idx(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

// Constructs the typed object so its validation runs, re-labelled with the JSON path.
template <class F>
void check_builds(const std::string& path, F&& build) {
  try {
    build();
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

Json resolve_law(const Json& j, const std::string& path) {
  Reader r(j, path);
  Json out;
  const std::string family = r.str("family");
  out["family"] = family;
  if (family == "pareto") {
    out["alpha"] = r.number("alpha");
    out["xmin"] = r.number("xmin", 1.0);
    out["loc"] = r.number("loc", 0.0);
  } else if (family == "pareto_mixture") {
    const Json& comps = r.array("components");
    out["components"] = Json::array();
    for (std::size_t i = 0; i < comps.size(); ++i) {
      Reader c(comps[i], idx(r.at("components"), i));
      out["components"].push_back(
          {{"weight", c.number("weight")}, {"alpha", c.number("alpha")}, {"xmin", c.number("xmin", 1.0)}});
      c.finish();
    }
    out["zero_mass"] = r.number("zero_mass", 0.0);
  } else if (family == "empirical") {
    out["data"] = r.numbers("data");
  } else {
    throw ConfigError(r.at("family") + ": unknown law family '" + family + "'");
  }
  r.finish();
  check_builds(path, [&] { law_from_json(out); });
  return out;
}

Json resolve_copula(const Json& j, const std::string& path) {
  Reader r(j, path);
  Json out;
  const std::string family = r.str("copula", "independence");
  out["copula"] = family;
  if (family == "independence") {
    out["theta"] = r.number("theta", 0.0);
  } else if (family == "fgm" || family == "amh" || family == "frank") {
    out["theta"] = r.number("theta");
  } else {
    throw ConfigError(r.at("copula") + ": unknown copula '" + family + "'");
  }
  r.finish();
  check_builds(path, [&] { copula_from_json(out); });
  return out;
}

Json resolve_weight(const Json& j, const std::string& path) {
  Reader r(j, path);
  Json out;
  const std::string law = r.str("law");
  out["law"] = law;
  if (law == "point") {
    out["value"] = r.number("value");
  } else if (law == "uniform") {
    out["lo"] = r.number("lo");
    out["hi"] = r.number("hi");
  } else if (law == "beta") {
    out["a"] = r.number("a");
    out["b"] = r.number("b");
    out["scale"] = r.number("scale", 1.0);
  } else {
    throw ConfigError(r.at("law") + ": unknown weight law '" + law + "'");
  }
  r.finish();
  check_builds(path, [&] { weight_from_json(out); });
  return out;
}

Json resolve_laws(Reader& r, const std::string& key) {
  const Json& arr = r.array(key);
  if (arr.empty()) throw ConfigError(r.at(key) + ": needs at least one law");
  Json out = Json::array();
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(resolve_law(arr[i], idx(r.at(key), i)));
  return out;
}

Json resolve_weights(Reader& r, const std::string& key, std::size_t count) {
  Json out = Json::array();
  if (const Json* arr = r.opt(key)) {
    if (!arr->is_array() || arr->size() != count) {
      throw ConfigError(r.at(key) + ": expected an array of " + std::to_string(count) + " weights");
    }
    for (std::size_t i = 0; i < count; ++i) out.push_back(resolve_weight((*arr)[i], idx(r.at(key), i)));
  } else {
    for (std::size_t i = 0; i < count; ++i) out.push_back({{"law", "point"}, {"value", 1.0}});
  }
  return out;
}

Json resolve_sum_spec(const Json& j, const std::string& path) {
  Reader r(j, path);
  Json out;
  out["x_laws"] = resolve_laws(r, "x_laws");
  out["y_laws"] = resolve_laws(r, "y_laws");
  const std::size_t n = out["x_laws"].size();
  const std::size_t m = out["y_laws"].size();
  const Json* matrix = r.opt("fgm_matrix");
  const Json* pairs = r.opt("pair_copulas");
  if (matrix && pairs) throw ConfigError(path + ": pair_copulas and fgm_matrix are exclusive");
  if (matrix) {
    std::vector<std::vector<double>> rows;
    if (!matrix->is_array()) throw ConfigError(r.at("fgm_matrix") + ": expected a matrix");
    for (std::size_t i = 0; i < matrix->size(); ++i) {
      rows.push_back(Reader::as_numbers((*matrix)[i], idx(r.at("fgm_matrix"), i)));
    }
    if (rows.size() != n + m) throw ConfigError(r.at("fgm_matrix") + ": must be (n + m) x (n + m)");
    check_builds(r.at("fgm_matrix"), [&] { MultivariateFgm{rows}; });
    out["fgm_matrix"] = rows;
  } else {
    out["fgm_matrix"] = nullptr;
    Json cops = Json::array();
    const std::size_t k = std::min(n, m);
    if (pairs) {
      if (!pairs->is_array() || pairs->size() != k) {
        throw ConfigError(r.at("pair_copulas") + ": expected " + std::to_string(k) + " copulas");
      }
      for (std::size_t i = 0; i < k; ++i) cops.push_back(resolve_copula((*pairs)[i], idx(r.at("pair_copulas"), i)));
    } else {
      for (std::size_t i = 0; i < k; ++i) cops.push_back({{"copula", "independence"}, {"theta", 0.0}});
    }
    out["pair_copulas"] = cops;
  }
  out["theta_weights"] = resolve_weights(r, "theta_weights", n);
  out["delta_weights"] = resolve_weights(r, "delta_weights", m);
  r.finish();
  return out;
}

Json resolve_interarrival(const Json& j, const std::string& path) {
  Reader r(j, path);
  Json out;
  const std::string law = r.str("law");
  out["law"] = law;
  if (law == "exponential") {
    out["rate"] = r.number("rate");
  } else if (law == "deterministic") {
    out["spacing"] = r.number("spacing");
  } else if (law == "gamma") {
    out["shape"] = r.number("shape");
    out["rate"] = r.number("rate");
  } else if (law == "uniform") {
    out["lo"] = r.number("lo");
    out["hi"] = r.number("hi");
  } else {
    throw ConfigError(r.at("law") + ": unknown interarrival law '" + law + "'");
  }
  r.finish();
  return out;
}

Json resolve_ruin_spec(const Json& j, const std::string& path) {
  Reader r(j, path);
  Json out;
  out["interarrival"] = resolve_interarrival(r.req("interarrival"), r.at("interarrival"));
  out["claim_x"] = resolve_law(r.req("claim_x"), r.at("claim_x"));
  out["claim_y"] = resolve_law(r.req("claim_y"), r.at("claim_y"));
  out["copula"] = r.has("copula") ? resolve_copula(r.req("copula"), r.at("copula"))
                                  : Json{{"copula", "independence"}, {"theta", 0.0}};
  r.opt("copula");
  out["premium_1"] = r.number("premium_1", 0.0);
  out["premium_2"] = r.number("premium_2", 0.0);
  out["interest"] = r.number("interest", 0.0);
  out["horizon"] = r.number("horizon", 1.0);
  out["step"] = r.number("step", out["horizon"].get<double>() / 2000.0);
  r.finish();
  check_builds(path, [&] { renewal_spec_from_json(out).validate(); });
  return out;
}

Json resolve_model(const Json& j, const std::string& path) {
  Reader r(j, path);
  Json out;
  out["alpha"] = r.number("alpha");
  out["xmin"] = r.number("xmin", 1.0);
  const Json& atoms = r.array("atoms");
  out["atoms"] = Json::array();
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    Reader a(atoms[i], idx(r.at("atoms"), i));
    out["atoms"].push_back({{"dir", a.numbers("dir")}, {"p", a.number("p")}});
    a.finish();
  }
  const std::string mode = r.str("theta_mode", "identity");
  if (mode != "identity" && mode != "independent" && mode != "common") {
    throw ConfigError(r.at("theta_mode") + ": expected identity, independent or common");
  }
  out["theta_mode"] = mode;
  out["theta_laws"] = Json::array();
  if (const Json* laws = r.opt("theta_laws")) {
    if (!laws->is_array()) throw ConfigError(r.at("theta_laws") + ": expected an array");
    for (std::size_t i = 0; i < laws->size(); ++i) {
      out["theta_laws"].push_back(resolve_weight((*laws)[i], idx(r.at("theta_laws"), i)));
    }
  }
  out["weights"] = r.numbers("weights");
  r.finish();
  check_builds(path, [&] { model_from_json(out).validate(); });
  return out;
}

Json resolve_distortion(const Json& j, const std::string& path) {
  Reader r(j, path);
  Json out;
  const std::string family = r.str("family", "identity");
  out["family"] = family;
  if (family == "identity") {
  } else if (family == "power" || family == "ph") {
    out["param"] = r.number("param");
  } else if (family == "table") {
    const Json& knots = r.array("knots");
    out["knots"] = Json::array();
    for (std::size_t i = 0; i < knots.size(); ++i) {
      const auto k = Reader::as_numbers(knots[i], idx(r.at("knots"), i));
      if (k.size() != 2) throw ConfigError(idx(r.at("knots"), i) + ": expected [u, g(u)]");
      out["knots"].push_back(k);
    }
  } else {
    throw ConfigError(r.at("family") + ": unknown distortion '" + family + "'");
  }
  r.finish();
  check_builds(path, [&] { distortion_from_json(out); });
  return out;
}

Json resolve_pair_ladder(const Json& j, const std::string& path) {
  Reader r(j, path);
  Json out;
  const Json* levels = r.opt("levels");
  const Json* thresholds = r.opt("thresholds");
  if (!!levels == !!thresholds) throw ConfigError(path + ": give exactly one of levels or thresholds");
  if (levels) {
    const auto v = Reader::as_numbers(*levels, r.at("levels"));
    for (double q : v) {
      if (!(q > 0.0 && q < 1.0)) throw ConfigError(r.at("levels") + ": levels must lie in (0, 1)");
    }
    out["levels"] = v;
  } else {
    if (!thresholds->is_array()) throw ConfigError(r.at("thresholds") + ": expected [[x, y], ...]");
    out["thresholds"] = Json::array();
    for (std::size_t i = 0; i < thresholds->size(); ++i) {
      const auto p = Reader::as_numbers((*thresholds)[i], idx(r.at("thresholds"), i));
      if (p.size() != 2) throw ConfigError(idx(r.at("thresholds"), i) + ": expected [x, y]");
      out["thresholds"].push_back(p);
    }
  }
  r.finish();
  return out;
}

Json resolve_run(const Json* j, const std::string& path) {
  const Json empty = Json::object();
  Reader r(j ? *j : empty, path);
  const RunPlan defaults;
  Json out;
  out["seed"] = r.count("seed", defaults.master_seed);
  out["samples"] = r.count("samples", defaults.n_samples);
  out["chunk_size"] = r.count("chunk_size", defaults.chunk_size);
  out["workers"] = r.count("workers", defaults.n_workers);
  r.finish();
  check_builds(path, [&] {
    RunPlan p;
    p.master_seed = out["seed"];
    p.n_samples = out["samples"];
    p.chunk_size = out["chunk_size"];
    p.n_workers = out["workers"];
    p.validate();
  });
  return out;
}

Json resolve_output(const Json* j, const std::string& path) {
  const Json empty = Json::object();
  Reader r(j ? *j : empty, path);
  Json out;
  out["path"] = r.str("path", "");
  out["format"] = r.str("format", "csv");
  if (out["format"] != "csv" && out["format"] != "json") throw ConfigError(r.at("format") + ": expected csv or json");
  r.finish();
  return out;
}

std::vector<std::pair<double, double>> resolve_pairs(const Json& ladder, const TailLaw& fx, const TailLaw& gy) {
  std::vector<std::pair<double, double>> out;
  if (ladder.contains("levels")) {
    for (double q : ladder["levels"].get<std::vector<double>>()) out.emplace_back(fx.upper_quantile(q), gy.upper_quantile(q));
  } else {
    for (const auto& p : ladder["thresholds"]) out.emplace_back(p[0].get<double>(), p[1].get<double>());
  }
  return out;
}

}  // namespace

Json parse_config_text(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

Json resolve_config(const Json& raw) {
  Reader r(raw, "config");
  Json out;
  const std::string wf = r.str("workflow");
  out["workflow"] = wf;
  if (wf == "joint_tail") {
    out["spec"] = resolve_sum_spec(r.req("spec"), "config.spec");
    out["ladder"] = resolve_pair_ladder(r.req("ladder"), "config.ladder");
  } else if (wf == "ruin") {
    out["spec"] = resolve_ruin_spec(r.req("spec"), "config.spec");
    out["ladder"] = resolve_pair_ladder(r.req("ladder"), "config.ladder");
  } else if (wf == "tdrm") {
    Reader s(r.req("spec"), "config.spec");
    Json spec;
    spec["model"] = resolve_model(s.req("model"), s.at("model"));
    spec["distortion"] = s.has("distortion") ? resolve_distortion(s.req("distortion"), s.at("distortion"))
                                             : Json{{"family", "identity"}};
    s.opt("distortion");
    spec["method"] = s.str("method", "both");
    if (spec["method"] != "exact" && spec["method"] != "asymptotic" && spec["method"] != "both") {
      throw ConfigError(s.at("method") + ": expected exact, asymptotic or both");
    }
    s.finish();
    out["spec"] = spec;
    Reader l(r.req("ladder"), "config.ladder");
    const auto ps = l.numbers("p");
    for (double p : ps) {
      if (!(p > 0.0 && p < 1.0)) throw ConfigError(l.at("p") + ": levels must lie in (0, 1)");
    }
    l.finish();
    out["ladder"] = {{"p", ps}};
  } else if (wf == "gtai_check") {
    Reader s(r.req("spec"), "config.spec");
    Json spec;
    spec["system"] = resolve_sum_spec(s.req("system"), s.at("system"));
    spec["tolerance"] = s.number("tolerance", 0.02);
    spec["products"] = s.str("products", "both");
    if (spec["products"] != "raw" && spec["products"] != "weighted" && spec["products"] != "both") {
      throw ConfigError(s.at("products") + ": expected raw, weighted or both");
    }
    spec["min_hits"] = s.count("min_hits", 30);
    s.finish();
    out["spec"] = spec;
    Reader l(r.req("ladder"), "config.ladder");
    out["ladder"] = {{"thresholds", l.numbers("thresholds")}};
    l.finish();
  } else if (wf == "classify") {
    Reader s(r.req("spec"), "config.spec");
    out["spec"] = {{"law", resolve_law(s.req("law"), s.at("law"))}};
    s.finish();
    Reader l(r.req("ladder"), "config.ladder");
    Json ladder;
    ladder["grid"] = l.numbers("grid");
    ladder["t_grid"] = l.has("t_grid") ? Json(l.numbers("t_grid")) : Json(std::vector<double>{2.0, 5.0, 10.0});
    l.opt("t_grid");
    l.finish();
    out["ladder"] = ladder;
  } else {
    throw ConfigError(r.at("workflow") + ": unknown workflow '" + wf +
                      "' (expected joint_tail, ruin, tdrm, gtai_check or classify)");
  }
  out["run"] = resolve_run(r.opt("run"), "config.run");
  out["output"] = resolve_output(r.opt("output"), "config.output");
  r.finish();
  return out;
}

RunPlan run_plan_from(const Json& resolved) {
  const Json& run = resolved.at("run");
  RunPlan p;
  p.master_seed = run.at("seed").get<std::uint64_t>();
  p.n_samples = run.at("samples").get<std::uint64_t>();
  p.chunk_size = run.at("chunk_size").get<std::uint64_t>();
  p.n_workers = run.at("workers").get<unsigned>();
  return p;
}

TailLaw law_from_json(const Json& j) {
  const std::string family = j.at("family");
  if (family == "pareto") return TailLaw::pareto(j.at("alpha"), j.at("xmin"), j.at("loc"));
  if (family == "pareto_mixture") {
    std::vector<MixtureComponent> comps;
    for (const auto& c : j.at("components")) comps.push_back({c.at("weight"), c.at("alpha"), c.at("xmin")});
    return TailLaw::pareto_mixture(std::move(comps), j.at("zero_mass"));
  }
  return TailLaw::empirical(j.at("data").get<std::vector<double>>());
}

Copula copula_from_json(const Json& j) {
  const std::string family = j.at("copula");
  const double theta = j.at("theta");
  if (family == "fgm") return Copula::fgm(theta);
  if (family == "amh") return Copula::ali_mikhail_haq(theta);
  if (family == "frank") return Copula::frank(theta);
  return Copula::independence();
}

WeightSpec weight_from_json(const Json& j) {
  const std::string law = j.at("law");
  if (law == "point") return WeightSpec::point(j.at("value"));
  if (law == "uniform") return WeightSpec::uniform(j.at("lo"), j.at("hi"));
  return WeightSpec::scaled_beta(j.at("a"), j.at("b"), j.at("scale"));
}

BivariateSumSpec sum_spec_from_json(const Json& j) {
  BivariateSumSpec s;
  for (const auto& l : j.at("x_laws")) s.x_laws.push_back(law_from_json(l));
  for (const auto& l : j.at("y_laws")) s.y_laws.push_back(law_from_json(l));
  for (const auto& w : j.at("theta_weights")) s.theta_weights.push_back(weight_from_json(w));
  for (const auto& w : j.at("delta_weights")) s.delta_weights.push_back(weight_from_json(w));
  if (j.contains("fgm_matrix") && !j.at("fgm_matrix").is_null()) {
    const MultivariateFgm fgm(j.at("fgm_matrix").get<std::vector<std::vector<double>>>());
    for (std::size_t i = 0; i < std::min(s.n(), s.m()); ++i) s.pair_copulas.push_back(fgm.pair(i, s.n() + i));
    s.primary_sampler = fgm_primary_sampler(fgm, s.x_laws, s.y_laws);
  } else {
    for (const auto& c : j.at("pair_copulas")) s.pair_copulas.push_back(copula_from_json(c));
  }
  s.validate();
  return s;
}

RenewalSpec renewal_spec_from_json(const Json& j) {
  const Json& ia = j.at("interarrival");
  const std::string law = ia.at("law");
  Interarrival arrivals = law == "exponential"     ? Interarrival::exponential(ia.at("rate"))
                          : law == "deterministic" ? Interarrival::deterministic(ia.at("spacing"))
                          : law == "gamma"         ? Interarrival::gamma(ia.at("shape"), ia.at("rate"))
                                                   : Interarrival::uniform(ia.at("lo"), ia.at("hi"));
  return RenewalSpec{arrivals,           law_from_json(j.at("claim_x")), law_from_json(j.at("claim_y")),
                     copula_from_json(j.at("copula")), j.at("premium_1"),  j.at("premium_2"),
                     j.at("interest"),   j.at("horizon")};
}

BackgroundRiskModel model_from_json(const Json& j) {
  std::vector<SpectralAtom> atoms;
  for (const auto& a : j.at("atoms")) atoms.push_back({a.at("dir").get<std::vector<double>>(), a.at("p")});
  const std::string mode = j.at("theta_mode");
  std::vector<WeightSpec> laws;
  for (const auto& w : j.at("theta_laws")) laws.push_back(weight_from_json(w));
  ProductMRVSpec product{MRVSpec(j.at("alpha"), j.at("xmin"), std::move(atoms)),
                         mode == "identity"      ? ThetaMode::Identity
                         : mode == "independent" ? ThetaMode::IndependentVector
                                                 : ThetaMode::CommonScalar,
                         std::move(laws)};
  return BackgroundRiskModel{std::move(product), j.at("weights").get<std::vector<double>>()};
}

Distortion distortion_from_json(const Json& j) {
  const std::string family = j.at("family");
  if (family == "power") return Distortion::power(j.at("param"));
  if (family == "ph") return Distortion::proportional_hazard(j.at("param"));
  if (family == "table") {
    std::vector<std::pair<double, double>> knots;
    for (const auto& k : j.at("knots")) knots.emplace_back(k[0].get<double>(), k[1].get<double>());
    return Distortion::table(std::move(knots));
  }
  return Distortion::identity();
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header) { row_strings(header); }

  template <class... T>
  void row(const T&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }

  std::string str() const { return out_.str(); }

 private:
  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }
  static std::string cell(double v) { return format_number(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(std::uint64_t v) { return std::to_string(v); }
  static std::string cell(bool v) { return v ? "true" : "false"; }

  std::ostringstream out_;
};

Json estimate_json(const JointTailEstimate& e) {
  return {{"value", e.value}, {"ci", e.ci_halfwidth}, {"n", e.n_samples}, {"hits", e.hits},
          {"ci_valid", e.ci_valid}, {"rule_of_three", e.rule_of_three}};
}

ExperimentOutput run_joint_tail(const Json& cfg, const RunPlan& plan) {
  const BivariateSumSpec spec = sum_spec_from_json(cfg["spec"]);
  const auto thresholds = resolve_pairs(cfg["ladder"], spec.x_laws.front(), spec.y_laws.front());
  const auto rows = joint_tail_ladder(spec, thresholds, plan);
  CsvWriter csv({"x", "y", "mc", "mc_ci", "rhs", "rhs_ci", "closed_form", "ratio", "ratio_ci"});
  ExperimentOutput out;
  out.results["rows"] = Json::array();
  for (const auto& r : rows) {
    csv.row(r.x, r.y, r.mc.value, r.mc.ci_halfwidth, r.rhs.value, r.rhs.ci_halfwidth, r.closed_form.value,
            r.ratio.value, r.ratio.ci95_halfwidth);
    out.results["rows"].push_back({{"x", r.x},
                                   {"y", r.y},
                                   {"mc", estimate_json(r.mc)},
                                   {"rhs", estimate_json(r.rhs)},
                                   {"closed_form", r.closed_form.value},
                                   {"closed_form_ci", r.closed_form.ci_halfwidth},
                                   {"ratio", r.ratio.value},
                                   {"ratio_ci", r.ratio.ci95_halfwidth},
                                   {"ratio_closed_form", r.ratio_closed_form.value},
                                   {"ratio_closed_form_ci", r.ratio_closed_form.ci95_halfwidth}});
  }
  out.results["warnings"] = weight_warnings(spec, plan.master_seed);
  out.csv = csv.str();
  return out;
}

ExperimentOutput run_ruin(const Json& cfg, const RunPlan& plan) {
  const RenewalSpec spec = renewal_spec_from_json(cfg["spec"]);
  const double step = cfg["spec"]["step"];
  const auto thresholds = resolve_pairs(cfg["ladder"], spec.claim_x, spec.claim_y);
  CsvWriter csv({"x", "y", "psi_max", "psi_max_ci", "psi_and", "psi_and_ci", "aggregate", "aggregate_ci", "delta",
                 "ratio_max", "ratio_max_ci", "ratio_and", "ratio_and_ci", "order_violations"});
  ExperimentOutput out;
  out.results["rows"] = Json::array();
  for (const auto& [x, y] : thresholds) {
    const RuinEstimate r = mc_ruin(spec, x, y, plan, step);
    csv.row(x, y, r.psi_max.value, r.psi_max.ci_halfwidth, r.psi_and.value, r.psi_and.ci_halfwidth,
            r.aggregate.value, r.aggregate.ci_halfwidth, r.delta, r.ratio_max.value, r.ratio_max.ci95_halfwidth,
            r.ratio_and.value, r.ratio_and.ci95_halfwidth, r.order_violations);
    out.results["rows"].push_back({{"x", x},
                                   {"y", y},
                                   {"psi_max", estimate_json(r.psi_max)},
                                   {"psi_and", estimate_json(r.psi_and)},
                                   {"aggregate", estimate_json(r.aggregate)},
                                   {"delta", r.delta},
                                   {"ratios", {{"psi_max", r.ratio_max.value}, {"psi_and", r.ratio_and.value}}},
                                   {"ci", {{"psi_max", r.ratio_max.ci95_halfwidth}, {"psi_and", r.ratio_and.ci95_halfwidth}}},
                                   {"order_violations", r.order_violations}});
  }
  const RenewalFunction lam = renewal_function(spec, step);
  const Estimate n_t = mc_renewal_mean(spec, spec.horizon, plan.with_seed_tag(7));
  out.results["renewal"] = {{"horizon", spec.horizon},
                            {"lambda_T", lam.values.back()},
                            {"mc_mean_N_T", n_t.mean},
                            {"mc_mean_N_T_ci", n_t.ci95_halfwidth()}};
  out.csv = csv.str();
  return out;
}

ExperimentOutput run_tdrm(const Json& cfg, const RunPlan& plan) {
  const BackgroundRiskModel model = model_from_json(cfg["spec"]["model"]);
  const Distortion g = distortion_from_json(cfg["spec"]["distortion"]);
  const std::string method = cfg["spec"]["method"];
  const double alpha = model.product.base.alpha();
  const bool want_exact = method != "asymptotic";
  const bool want_asy = method != "exact";

  if (want_asy && !condition_check(g, alpha).ok) {
    throw ConditionError("tdrm: integrability condition fails for this distortion and alpha");
  }
  const double ca = c_alpha(g, alpha);
  const GammaResult gam = gamma_w(model.product, model.weights, plan.with_seed_tag(1));
  std::optional<ModelLaw> aggregate;
  if (want_exact) aggregate = model_aggregate_law(model, plan);
  std::vector<ModelLaw> components;
  if (want_asy) {
    for (std::size_t i = 0; i < model.product.base.dim(); ++i) {
      components.push_back(model_component_law(model, i, plan.with_seed_tag(100 + i)));
    }
  }

  CsvWriter csv({"p", "tdrm_exact", "tdrm_asy", "ratio", "alpha", "C_alpha", "gamma_w", "Gamma_alpha"});
  ExperimentOutput out;
  out.results["constants"] = {{"alpha", alpha},
                              {"C_alpha", ca},
                              {"gamma_w", gam.gamma_w},
                              {"gamma_w_ci", gam.gamma_w_ci},
                              {"gammas_ei", gam.gammas_ei},
                              {"Gamma_alpha", gam.Gamma_alpha},
                              {"Gamma_alpha_ci", gam.Gamma_alpha_ci},
                              {"exact_gammas", gam.exact},
                              {"exact_law", aggregate ? aggregate->exact : true}};
  out.results["rows"] = Json::array();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (double p : cfg["ladder"]["p"].get<std::vector<double>>()) {
    const double ex = want_exact ? tdrm_exact(aggregate->law, g, p) : nan;
    double asy = nan;
    if (want_asy) {
      double sum = 0.0;
      for (const auto& c : components) sum += empirical_var(c.law, p).value;
      asy = ca * std::pow(gam.gamma_w, 1.0 / alpha) / gam.Gamma_alpha * sum;
    }
    csv.row(p, ex, asy, ex / asy, alpha, ca, gam.gamma_w, gam.Gamma_alpha);
    out.results["rows"].push_back({{"p", p}, {"tdrm_exact", ex}, {"tdrm_asy", asy}, {"ratio", ex / asy}});
  }
  out.csv = csv.str();
  return out;
}

ExperimentOutput run_gtai(const Json& cfg, const RunPlan& plan) {
  const BivariateSumSpec spec = sum_spec_from_json(cfg["spec"]["system"]);
  GtaiOptions opts;
  opts.tolerance = cfg["spec"]["tolerance"];
  opts.min_hits = cfg["spec"]["min_hits"];
  const std::string products = cfg["spec"]["products"];
  const auto thresholds = cfg["ladder"]["thresholds"].get<std::vector<double>>();
  CsvWriter csv({"mode", "triple", "threshold", "estimate", "ci", "conditioning_hits", "inconclusive"});
  ExperimentOutput out;
  out.results["passed"] = true;
  for (const std::string mode : {"raw", "weighted"}) {
    if (products != "both" && products != mode) continue;
    opts.weighted_products = mode == "weighted";
    const GtaiReport rep = gtai_diagnostic(spec, thresholds, plan, opts);
    for (const auto& c : rep.grid) {
      csv.row(mode, c.triple, c.threshold, c.estimate, c.ci_halfwidth, c.conditioning_hits, c.inconclusive);
    }
    out.results[mode] = {{"passed", rep.passed},
                         {"max_conditional", rep.max_conditional},
                         {"min_conditioning_hits", rep.min_conditioning_hits}};
    out.results["passed"] = out.results["passed"].get<bool>() && rep.passed;
  }
  out.csv = csv.str();
  return out;
}

ExperimentOutput run_classify(const Json& cfg) {
  const TailLaw law = law_from_json(cfg["spec"]["law"]);
  const TailClassReport rep = classify(law, cfg["ladder"]["grid"].get<std::vector<double>>(),
                                       cfg["ladder"]["t_grid"].get<std::vector<double>>());
  CsvWriter csv({"kind", "x", "t", "ratio"});
  for (const auto& p : rep.long_tail_ratio_at) csv.row("long_tail", p.x, "", p.ratio);
  for (const auto& p : rep.dominated_ratio_at) csv.row("dominated", p.x, p.t, p.ratio);
  ExperimentOutput out;
  out.results = {{"class_tags", law.class_tags().to_string()},
                 {"upper_matuszewska", rep.upper_matuszewska},
                 {"lower_matuszewska", rep.lower_matuszewska},
                 {"insensitivity_ok", rep.insensitivity_ok}};
  if (const auto a = law.rv_index()) out.results["rv_index"] = *a;
  out.csv = csv.str();
  return out;
}

}  // namespace

ExperimentOutput run_experiment(const Json& resolved) {
  const RunPlan plan = run_plan_from(resolved);
  const std::string wf = resolved.at("workflow");
  if (wf == "joint_tail") return run_joint_tail(resolved, plan);
  if (wf == "ruin") return run_ruin(resolved, plan);
  if (wf == "tdrm") return run_tdrm(resolved, plan);
  if (wf == "gtai_check") return run_gtai(resolved, plan);
  return run_classify(resolved);
}

namespace {

const char* const kCatalog = R"json([
{"id": "breiman-product",
 "description": "One weighted Pareto pair with FGM dependence and uniform weights: Monte Carlo against the single-jump sum and the closed form",
 "config": {"workflow": "joint_tail",
  "spec": {"x_laws": [{"family": "pareto", "alpha": 2.0}], "y_laws": [{"family": "pareto", "alpha": 2.0}],
           "pair_copulas": [{"copula": "fgm", "theta": 1.0}],
           "theta_weights": [{"law": "uniform", "lo": 0.5, "hi": 1.0}],
           "delta_weights": [{"law": "uniform", "lo": 0.5, "hi": 1.0}]},
  "ladder": {"levels": [0.01, 0.001]},
  "run": {"samples": 1000000}}},
{"id": "corollary-n2",
 "description": "Two-dimensional background-risk model with independent uniform Θ: exact TDRM against the asymptotic form",
 "config": {"workflow": "tdrm",
  "spec": {"model": {"alpha": 2.5, "atoms": [{"dir": [1, 0], "p": 0.5}, {"dir": [0, 1], "p": 0.5}],
                     "theta_mode": "independent",
                     "theta_laws": [{"law": "uniform", "lo": 0.5, "hi": 1.0}, {"law": "uniform", "lo": 0.0, "hi": 1.0}],
                     "weights": [0.5, 0.5]},
           "distortion": {"family": "ph", "param": 1.5}, "method": "both"},
  "ladder": {"p": [0.99, 0.999]},
  "run": {"samples": 1000000}}},
{"id": "gtai-example",
 "description": "Four-dimensional pairwise FGM system (all θ = 0.3): conditional exceedance ladder for raw and weighted variables",
 "config": {"workflow": "gtai_check",
  "spec": {"system": {"x_laws": [{"family": "pareto", "alpha": 2.0}, {"family": "pareto", "alpha": 2.0}],
                      "y_laws": [{"family": "pareto", "alpha": 2.0}, {"family": "pareto", "alpha": 2.0}],
                      "fgm_matrix": [[0, 0.3, 0.3, 0.3], [0.3, 0, 0.3, 0.3], [0.3, 0.3, 0, 0.3], [0.3, 0.3, 0.3, 0]],
                      "theta_weights": [{"law": "uniform", "lo": 0.5, "hi": 1.0}, {"law": "uniform", "lo": 0.5, "hi": 1.0}],
                      "delta_weights": [{"law": "uniform", "lo": 0.5, "hi": 1.0}, {"law": "uniform", "lo": 0.5, "hi": 1.0}]},
           "tolerance": 0.02, "products": "both"},
  "ladder": {"thresholds": [2, 4, 6, 8, 10, 12]},
  "run": {"samples": 2000000}}},
{"id": "renewal-fgm",
 "description": "Poisson arrivals, Pareto claims coupled by FGM(1), expected-value premiums: ruin probabilities against the asymptotic",
 "config": {"workflow": "ruin",
  "spec": {"interarrival": {"law": "exponential", "rate": 1.0},
           "claim_x": {"family": "pareto", "alpha": 2.0}, "claim_y": {"family": "pareto", "alpha": 2.0},
           "copula": {"copula": "fgm", "theta": 1.0},
           "premium_1": 2.4, "premium_2": 2.4, "interest": 0.05, "horizon": 5.0},
  "ladder": {"levels": [0.0316227766016838, 0.01]},
  "run": {"samples": 1000000}}},
{"id": "renewal-gamma",
 "description": "Gamma(2, 2) inter-arrivals with AMH(0.5) claims: renewal function and ruin ladder",
 "config": {"workflow": "ruin",
  "spec": {"interarrival": {"law": "gamma", "shape": 2.0, "rate": 2.0},
           "claim_x": {"family": "pareto", "alpha": 2.0}, "claim_y": {"family": "pareto", "alpha": 3.0},
           "copula": {"copula": "amh", "theta": 0.5},
           "premium_1": 1.0, "premium_2": 1.0, "interest": 0.03, "horizon": 4.0},
  "ladder": {"levels": [0.05, 0.01]},
  "run": {"samples": 500000}}},
{"id": "tdrm-comonotone",
 "description": "Comonotone two-dimensional Pareto vector under a power distortion",
 "config": {"workflow": "tdrm",
  "spec": {"model": {"alpha": 3.0, "atoms": [{"dir": [0.5, 0.5], "p": 1.0}], "weights": [0.5, 0.5]},
           "distortion": {"family": "power", "param": 0.8}, "method": "both"},
  "ladder": {"p": [0.99, 0.999, 0.9999]}}},
{"id": "gamma-two-atom",
 "description": "Two-atom spectral measure with a common scalar Θ: γ_w, Γ_α and the asymptotic TDRM",
 "config": {"workflow": "tdrm",
  "spec": {"model": {"alpha": 2.0, "atoms": [{"dir": [0.8, 0.2], "p": 0.5}, {"dir": [0.2, 0.8], "p": 0.5}],
                     "theta_mode": "common", "theta_laws": [{"law": "beta", "a": 2.0, "b": 2.0}],
                     "weights": [0.7, 0.3]},
           "distortion": {"family": "identity"}, "method": "asymptotic"},
  "ladder": {"p": [0.99, 0.999]}}},
{"id": "pareto-classify",
 "description": "Finite-x class diagnostics and Matuszewska estimates for a Pareto mixture",
 "config": {"workflow": "classify",
  "spec": {"law": {"family": "pareto_mixture",
                   "components": [{"weight": 0.7, "alpha": 2.5}, {"weight": 0.3, "alpha": 1.5, "xmin": 2.0}]}},
  "ladder": {"grid": [10, 100, 1000, 10000], "t_grid": [2, 5, 10]}}}
])json";

}  // namespace

const std::vector<CatalogEntry>& example_catalog() {
  static const std::vector<CatalogEntry> entries = [] {
    std::vector<CatalogEntry> out;
    for (const auto& e : Json::parse(kCatalog)) {
      out.push_back({e.at("id"), e.at("description"), e.at("config")});
    }
    return out;
  }();
  return entries;
}

}  // namespace tailrisk
