#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lrgame/estimation.hpp"
#include "lrgame/generators.hpp"
#include "lrgame/monte_carlo.hpp"
#include "lrgame/scalarization.hpp"

namespace lrgame::harness {

inline constexpr int kSchemaVersion = 1;

enum class Experiment { Equilibrium, SocialOpt, Pos, Aitken, Sweep, MonteCarlo, GradCheck };
enum class Format { Csv, JsonLines };

std::string to_string(Experiment e);
std::optional<Experiment> parse_experiment(const std::string& name);

/// Invalid configuration; the message starts with the offending field path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct InlineInstance {
  MatrixX<double> features;
  std::optional<VectorX<double>> true_model;
};

struct GeneratedInstance {
  Index n = 0;
  Index d = 0;
  FeatureDistribution distribution = FeatureDistribution::Gaussian;
  bool normalize = true;
  std::optional<std::uint64_t> seed;
};

struct MonomialParams {
  double c = 1.0;
  double k = 2.0;
};

/// Exactly one of `broadcast`, `per_player`, `c_range` is set.
struct CostConfig {
  std::optional<MonomialParams> broadcast;
  std::vector<MonomialParams> per_player;
  std::optional<std::pair<double, double>> c_range;  // coefficients drawn per player, common exponent
  double range_exponent = 2.0;
};

struct EstimatorConfig {
  std::optional<MatrixX<double>> null_matrix;
  double d_norm = 1.0;
  double a = 1.0;
  int a_grid = 11;
  std::optional<std::uint64_t> seed;
};

struct SolverConfig {
  double tol = 1e-8;
  std::int64_t max_iter = 100000;
};

enum class ProfileChoice { Cap, Equilibrium, Explicit };

struct MonteCarloConfig {
  std::int64_t trials = 100000;
  NoiseKind noise = NoiseKind::Gaussian;
  ProfileChoice profile = ProfileChoice::Cap;
  VectorX<double> explicit_profile;
  bool use_estimator = false;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::Equilibrium;
  std::uint64_t seed = 0;
  int cells = 1;
  int workers = 0;  // 0: hardware concurrency
  double inherent_variance = 1.0;
  std::optional<InlineInstance> inline_instance;
  std::optional<GeneratedInstance> generated_instance;
  std::optional<CostConfig> costs;
  ScalarizationKind kind = ScalarizationKind::Trace;
  std::optional<EstimatorConfig> estimator;
  SolverConfig solver;
  MonteCarloConfig montecarlo;
  double gradcheck_step = 1e-6;
  std::optional<std::string> output_path;
  std::optional<Format> output_format;

  Index n() const;
  Index d() const;

  /// Replaces the top-level seed and drops component seeds so every stream derives from it.
  void override_seed(std::uint64_t seed);
};

/// Parses and validates a JSON document. `expected` pins the experiment type when
/// the config omits it and rejects a mismatch otherwise.
ExperimentConfig parse_config(const std::string& text, std::optional<Experiment> expected = std::nullopt);
ExperimentConfig load_config(const std::string& path, std::optional<Experiment> expected = std::nullopt);

}  // namespace lrgame::harness
