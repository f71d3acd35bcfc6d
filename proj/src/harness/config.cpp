#include "lrgame/harness/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace lrgame::harness {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

std::string indexed(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

/// Tracks which keys of an object were consumed so leftovers can be rejected.
class ObjectReader {
 public:
  ObjectReader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_.empty() ? "$" : path_, "expected an object");
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  const json& require(const std::string& key) {
    const json* v = find(key);
    if (v == nullptr) throw ConfigError(path(key), "required key is missing");
    return *v;
  }

  bool has(const std::string& key) const { return node_.contains(key); }
  std::string path(const std::string& key) const { return join(path_, key); }

  void finish() const {
    for (const auto& item : node_.items()) {
      if (!seen_.count(item.key())) throw ConfigError(path(item.key()), "unknown key");
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "expected a finite number");
  return x;
}

double positive(const json& v, const std::string& path) {
  const double x = as_number(v, path);
  if (!(x > 0)) throw ConfigError(path, "must be positive");
  return x;
}

std::int64_t as_integer(const json& v, const std::string& path, std::int64_t lo) {
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
  if (v.is_number_unsigned() && v.get<std::uint64_t>() > std::uint64_t(std::numeric_limits<std::int64_t>::max())) {
    throw ConfigError(path, "integer out of range");
  }
  const auto x = v.get<std::int64_t>();
  if (x < lo) throw ConfigError(path, "must be >= " + std::to_string(lo));
  return x;
}

std::uint64_t as_seed(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    if (v.get<std::int64_t>() < 0) throw ConfigError(path, "seeds are unsigned 64-bit integers");
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  throw ConfigError(path, "seeds are unsigned 64-bit integers");
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw ConfigError(path, "expected a boolean");
  return v.get<bool>();
}

VectorX<double> as_vector(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a nonempty array of numbers");
  VectorX<double> out(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(Index(i)) = as_number(v[i], indexed(path, i));
  return out;
}

MatrixX<double> as_matrix(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a nonempty array of rows");
  std::size_t cols = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_array() || v[i].empty()) throw ConfigError(indexed(path, i), "expected a nonempty row");
    if (i == 0) cols = v[i].size();
    if (v[i].size() != cols) throw ConfigError(indexed(path, i), "row length differs from the first row");
  }
  MatrixX<double> out(static_cast<Index>(v.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) out(Index(i), Index(j)) = as_number(v[i][j], indexed(indexed(path, i), j));
  }
  return out;
}

MonomialParams as_monomial(ObjectReader& r) {
  MonomialParams m;
  m.c = positive(r.require("c"), r.path("c"));
  m.k = as_number(r.require("k"), r.path("k"));
  if (m.k < 1) throw ConfigError(r.path("k"), "exponent must be >= 1");
  return m;
}

void parse_instance(const json& node, ExperimentConfig& cfg) {
  ObjectReader r(node, "instance");
  if (const json* s = r.find("inherent_variance")) cfg.inherent_variance = positive(*s, r.path("inherent_variance"));
  const bool has_inline = r.has("features");
  const bool has_generator = r.has("generator");
  if (has_inline == has_generator) throw ConfigError("instance", "give exactly one of 'features' or 'generator'");
  if (has_inline) {
    InlineInstance inst;
    inst.features = as_matrix(r.require("features"), r.path("features"));
    if (const json* b = r.find("true_model")) inst.true_model = as_vector(*b, r.path("true_model"));
    cfg.inline_instance = std::move(inst);
  } else {
    ObjectReader g(r.require("generator"), r.path("generator"));
    GeneratedInstance gen;
    gen.n = as_integer(g.require("n"), g.path("n"), 1);
    gen.d = as_integer(g.require("d"), g.path("d"), 1);
    if (gen.n < gen.d) throw ConfigError(g.path("n"), "need n >= d");
    if (const json* dist = g.find("feature_distribution")) {
      const auto name = as_string(*dist, g.path("feature_distribution"));
      if (name == "gaussian") {
        gen.distribution = FeatureDistribution::Gaussian;
      } else if (name == "uniform_sphere") {
        gen.distribution = FeatureDistribution::UniformSphere;
      } else {
        throw ConfigError(g.path("feature_distribution"), "expected 'gaussian' or 'uniform_sphere'");
      }
    }
    if (const json* norm = g.find("normalize")) gen.normalize = as_bool(*norm, g.path("normalize"));
    if (const json* seed = g.find("seed")) gen.seed = as_seed(*seed, g.path("seed"));
    g.finish();
    cfg.generated_instance = gen;
  }
  r.finish();
}

void parse_costs(const json& node, ExperimentConfig& cfg) {
  ObjectReader r(node, "costs");
  CostConfig costs;
  const int forms = int(r.has("c")) + int(r.has("per_player")) + int(r.has("c_range"));
  if (forms != 1) throw ConfigError("costs", "give exactly one of 'c' (with 'k'), 'per_player' or 'c_range'");
  if (r.has("c")) {
    costs.broadcast = as_monomial(r);
  } else if (r.has("per_player")) {
    const json& list = r.require("per_player");
    const auto path = r.path("per_player");
    if (!list.is_array() || list.empty()) throw ConfigError(path, "expected a nonempty array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      ObjectReader item(list[i], indexed(path, i));
      costs.per_player.push_back(as_monomial(item));
      item.finish();
    }
    if (Index(costs.per_player.size()) != cfg.n()) {
      throw ConfigError(path, "expected " + std::to_string(cfg.n()) + " entries, one per player");
    }
  } else {
    const json& range = r.require("c_range");
    const auto path = r.path("c_range");
    if (!range.is_array() || range.size() != 2) throw ConfigError(path, "expected [low, high]");
    const double lo = positive(range[0], indexed(path, 0));
    const double hi = as_number(range[1], indexed(path, 1));
    if (hi < lo) throw ConfigError(path, "high must be >= low");
    costs.c_range = {lo, hi};
    costs.range_exponent = as_number(r.require("k"), r.path("k"));
    if (costs.range_exponent < 1) throw ConfigError(r.path("k"), "exponent must be >= 1");
  }
  r.finish();
  cfg.costs = std::move(costs);
}

void parse_estimator(const json& node, ExperimentConfig& cfg) {
  ObjectReader r(node, "estimator");
  EstimatorConfig est;
  if (const json* m = r.find("null_matrix")) {
    est.null_matrix = as_matrix(*m, r.path("null_matrix"));
    if (est.null_matrix->rows() != cfg.n() || est.null_matrix->cols() != cfg.d()) {
      throw ConfigError(r.path("null_matrix"), "expected an n x d matrix");
    }
  }
  if (const json* dn = r.find("d_norm")) {
    est.d_norm = as_number(*dn, r.path("d_norm"));
    if (est.d_norm < 0) throw ConfigError(r.path("d_norm"), "must be >= 0");
    if (est.null_matrix) throw ConfigError(r.path("d_norm"), "not allowed together with 'null_matrix'");
  }
  if (const json* a = r.find("a")) {
    est.a = as_number(*a, r.path("a"));
    if (est.a < 0 || est.a > 1) throw ConfigError(r.path("a"), "must lie in [0, 1]");
  }
  if (const json* grid = r.find("a_grid")) est.a_grid = int(as_integer(*grid, r.path("a_grid"), 3));
  if (const json* seed = r.find("seed")) est.seed = as_seed(*seed, r.path("seed"));
  r.finish();
  if (!est.null_matrix && cfg.n() <= cfg.d()) {
    throw ConfigError("estimator", "random null directions need n > d");
  }
  cfg.estimator = std::move(est);
}

void parse_montecarlo(const json& node, ExperimentConfig& cfg) {
  ObjectReader r(node, "montecarlo");
  auto& mc = cfg.montecarlo;
  if (const json* t = r.find("trials")) mc.trials = as_integer(*t, r.path("trials"), 1);
  if (const json* noise = r.find("noise")) {
    const auto name = as_string(*noise, r.path("noise"));
    if (name == "gaussian") {
      mc.noise = NoiseKind::Gaussian;
    } else if (name == "uniform") {
      mc.noise = NoiseKind::Uniform;
    } else if (name == "rademacher") {
      mc.noise = NoiseKind::Rademacher;
    } else {
      throw ConfigError(r.path("noise"), "expected 'gaussian', 'uniform' or 'rademacher'");
    }
  }
  if (const json* p = r.find("profile")) {
    if (p->is_string()) {
      const auto name = p->get<std::string>();
      if (name == "cap") {
        mc.profile = ProfileChoice::Cap;
      } else if (name == "equilibrium") {
        mc.profile = ProfileChoice::Equilibrium;
      } else {
        throw ConfigError(r.path("profile"), "expected 'cap', 'equilibrium' or an array");
      }
    } else {
      mc.profile = ProfileChoice::Explicit;
      mc.explicit_profile = as_vector(*p, r.path("profile"));
      if (mc.explicit_profile.size() != cfg.n()) throw ConfigError(r.path("profile"), "expected one entry per player");
    }
  }
  if (const json* u = r.find("use_estimator")) mc.use_estimator = as_bool(*u, r.path("use_estimator"));
  r.finish();
}

void parse_output(const json& node, ExperimentConfig& cfg) {
  ObjectReader r(node, "output");
  if (const json* p = r.find("path")) cfg.output_path = as_string(*p, r.path("path"));
  if (const json* f = r.find("format")) {
    const auto name = as_string(*f, r.path("format"));
    if (name == "csv") {
      cfg.output_format = Format::Csv;
    } else if (name == "jsonl") {
      cfg.output_format = Format::JsonLines;
    } else {
      throw ConfigError(r.path("format"), "expected 'csv' or 'jsonl'");
    }
  }
  r.finish();
}

void cross_check(const ExperimentConfig& cfg) {
  const auto e = cfg.experiment;
  const bool needs_costs = e == Experiment::Equilibrium || e == Experiment::SocialOpt || e == Experiment::Pos ||
                           e == Experiment::Aitken || e == Experiment::Sweep ||
                           (e == Experiment::MonteCarlo && cfg.montecarlo.profile == ProfileChoice::Equilibrium);
  if (needs_costs && !cfg.costs) throw ConfigError("costs", "required for this experiment");
  if ((e == Experiment::Aitken || e == Experiment::Sweep) && !cfg.estimator) {
    throw ConfigError("estimator", "required for this experiment");
  }
  if (e == Experiment::MonteCarlo && cfg.montecarlo.use_estimator && !cfg.estimator) {
    throw ConfigError("montecarlo.use_estimator", "needs an 'estimator' section");
  }
  if (cfg.estimator && cfg.kind != ScalarizationKind::Trace) {
    throw ConfigError("scalarization", "estimator perturbations require 'trace'");
  }
  if (e == Experiment::MonteCarlo && cfg.inline_instance && !cfg.inline_instance->true_model) {
    throw ConfigError("instance.true_model", "required for montecarlo with an inline instance");
  }
  if (cfg.inline_instance && cfg.inline_instance->true_model &&
      cfg.inline_instance->true_model->size() != cfg.inline_instance->features.cols()) {
    throw ConfigError("instance.true_model", "expected d entries");
  }
  if (!cfg.inline_instance) return;
  try {
    const RegressionInstance<double> inst(cfg.inline_instance->features, cfg.inherent_variance);
    if (cfg.estimator && cfg.estimator->null_matrix) {
      try {
        EstimatorSpec<double>(inst, *cfg.estimator->null_matrix, cfg.estimator->a);
      } catch (const Error& e) {
        throw ConfigError("estimator.null_matrix", e.what());
      }
    }
    if (cfg.montecarlo.profile == ProfileChoice::Explicit) {
      const auto& p = cfg.montecarlo.explicit_profile;
      if (p.minCoeff() < 0 || p.maxCoeff() > inst.cap()) {
        throw ConfigError("montecarlo.profile", "entries must lie in [0, 1/inherent_variance]");
      }
    }
  } catch (const Error& e) {
    throw ConfigError("instance.features", e.what());
  }
}

}  // namespace

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::Equilibrium: return "equilibrium";
    case Experiment::SocialOpt: return "social-opt";
    case Experiment::Pos: return "pos";
    case Experiment::Aitken: return "aitken";
    case Experiment::Sweep: return "sweep";
    case Experiment::MonteCarlo: return "montecarlo";
    case Experiment::GradCheck: return "gradcheck";
  }
  return "equilibrium";
}

std::optional<Experiment> parse_experiment(const std::string& name) {
  for (auto e : {Experiment::Equilibrium, Experiment::SocialOpt, Experiment::Pos, Experiment::Aitken, Experiment::Sweep,
                 Experiment::MonteCarlo, Experiment::GradCheck}) {
    if (to_string(e) == name) return e;
  }
  return std::nullopt;
}

Index ExperimentConfig::n() const {
  return inline_instance ? inline_instance->features.rows() : generated_instance ? generated_instance->n : 0;
}

Index ExperimentConfig::d() const {
  return inline_instance ? inline_instance->features.cols() : generated_instance ? generated_instance->d : 0;
}

void ExperimentConfig::override_seed(std::uint64_t s) {
  seed = s;
  if (generated_instance) generated_instance->seed.reset();
  if (estimator) estimator->seed.reset();
}

ExperimentConfig parse_config(const std::string& text, std::optional<Experiment> expected) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("$", std::string("invalid JSON: ") + e.what());
  }
  ObjectReader r(doc, "");
  ExperimentConfig cfg;

  const auto version = as_integer(r.require("schema_version"), "schema_version", 0);
  if (version != kSchemaVersion) {
    throw ConfigError("schema_version", "unsupported version " + std::to_string(version) + ", expected " +
                                            std::to_string(kSchemaVersion));
  }
  if (const json* e = r.find("experiment")) {
    const auto name = as_string(*e, "experiment");
    const auto parsed = parse_experiment(name);
    if (!parsed) throw ConfigError("experiment", "unknown experiment '" + name + "'");
    if (expected && *expected != *parsed) {
      throw ConfigError("experiment", "config is for '" + name + "' but '" + to_string(*expected) + "' was requested");
    }
    cfg.experiment = *parsed;
  } else if (expected) {
    cfg.experiment = *expected;
  } else {
    throw ConfigError("experiment", "required key is missing");
  }

  if (const json* s = r.find("seed")) cfg.seed = as_seed(*s, "seed");
  if (const json* c = r.find("cells")) cfg.cells = int(as_integer(*c, "cells", 1));
  if (const json* w = r.find("workers")) cfg.workers = int(as_integer(*w, "workers", 0));
  parse_instance(r.require("instance"), cfg);
  if (const json* k = r.find("scalarization")) {
    const auto name = as_string(*k, "scalarization");
    if (name == "trace") {
      cfg.kind = ScalarizationKind::Trace;
    } else if (name == "frobenius2") {
      cfg.kind = ScalarizationKind::FrobeniusSquared;
    } else {
      throw ConfigError("scalarization", "expected 'trace' or 'frobenius2'");
    }
  }
  if (const json* c = r.find("costs")) parse_costs(*c, cfg);
  if (const json* e = r.find("estimator")) parse_estimator(*e, cfg);
  if (const json* s = r.find("solver")) {
    ObjectReader sr(*s, "solver");
    if (const json* t = sr.find("tol")) cfg.solver.tol = positive(*t, "solver.tol");
    if (const json* m = sr.find("max_iter")) cfg.solver.max_iter = as_integer(*m, "solver.max_iter", 1);
    sr.finish();
  }
  if (const json* m = r.find("montecarlo")) parse_montecarlo(*m, cfg);
  if (const json* g = r.find("gradcheck")) {
    ObjectReader gr(*g, "gradcheck");
    if (const json* st = gr.find("step")) cfg.gradcheck_step = positive(*st, "gradcheck.step");
    gr.finish();
  }
  if (const json* o = r.find("output")) parse_output(*o, cfg);
  r.finish();
  cross_check(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path, std::optional<Experiment> expected) {
  std::ifstream in(path);
  if (!in) throw ConfigError("$", "cannot read config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), expected);
}

}  // namespace lrgame::harness
