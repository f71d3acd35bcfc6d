#include "lrgame/harness/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <random>
#include <thread>

#include "lrgame/lrgame.hpp"

namespace lrgame::harness {

namespace {

using Game = GameSpec<double>;
using Instance = RegressionInstance<double>;
using Profile = ActionProfile<double>;

// Sub-stream indices under the per-cell seed.
enum Stream : std::uint64_t { kInstance = 1, kCosts = 2, kNullDirection = 3, kMonteCarlo = 4, kProfile = 5 };

const std::vector<std::string>& prefix() {
  static const std::vector<std::string> cols{"cell", "seed", "n", "d", "k", "kind"};
  return cols;
}

std::vector<std::string> body(Experiment e) {
  switch (e) {
    case Experiment::Equilibrium:
      return {"estimator_a", "lambda", "potential", "f", "social_cost", "kkt_residual", "iterations", "status",
              "at_zero", "interior", "at_cap"};
    case Experiment::SocialOpt:
      return {"lambda_opt", "social_cost", "f", "kkt_residual"};
    case Experiment::Pos:
      return {"estimator_a", "lambda_nash", "lambda_opt", "nash_social_cost", "opt_cost", "pos", "bound",
              "bound_source", "bound_satisfied", "sandwich_lower_ok", "sandwich_upper_ok", "sandwich_lower_margin",
              "sandwich_upper_margin", "sandwich_advisory"};
    case Experiment::Aitken:
      return {"a", "d_norm", "lambda_gls", "lambda_lue", "gls_cost", "lue_cost", "margin", "holds"};
    case Experiment::Sweep:
      return {"grid_index", "a", "lambda", "f", "cost_monotone", "max_cost_violation", "profiles_monotone",
              "max_profile_violation"};
    case Experiment::MonteCarlo:
      return {"estimator_a", "noise", "trials", "profile", "mean_deviation", "covariance_deviation"};
    case Experiment::GradCheck:
      return {"estimator_a", "profile", "max_rel_error"};
  }
  return {};
}

struct Cell {
  int index = 0;
  std::uint64_t seed = 0;
  Instance instance;
  std::optional<Game> game;
  std::optional<EstimatorSpec<double>> estimator;
};

Instance make_instance(const ExperimentConfig& cfg, int cell, std::uint64_t cell_seed) {
  if (cfg.inline_instance) {
    return Instance(cfg.inline_instance->features, cfg.inherent_variance, cfg.inline_instance->true_model);
  }
  const auto& g = *cfg.generated_instance;
  const std::uint64_t seed = g.seed ? derive_seed(*g.seed, std::uint64_t(cell)) : derive_seed(cell_seed, kInstance);
  return random_instance<double>(g.n, g.d, g.distribution, seed, cfg.inherent_variance, g.normalize);
}

std::vector<PrivacyCost<double>> make_costs(const CostConfig& c, Index n, std::uint64_t cell_seed) {
  std::vector<PrivacyCost<double>> out;
  if (c.broadcast) {
    out.assign(std::size_t(n), PrivacyCost<double>::monomial(c.broadcast->c, c.broadcast->k));
  } else if (!c.per_player.empty()) {
    for (const auto& m : c.per_player) out.push_back(PrivacyCost<double>::monomial(m.c, m.k));
  } else {
    std::mt19937_64 rng(derive_seed(cell_seed, kCosts));
    std::uniform_real_distribution<double> coef(c.c_range->first, c.c_range->second);
    for (Index i = 0; i < n; ++i) out.push_back(PrivacyCost<double>::monomial(coef(rng), c.range_exponent));
  }
  return out;
}

Cell make_cell(const ExperimentConfig& cfg, int index) {
  Cell cell{index, derive_seed(cfg.seed, std::uint64_t(index)), Instance(MatrixX<double>::Identity(1, 1), 1.0), {}, {}};
  cell.instance = make_instance(cfg, index, cell.seed);
  if (cfg.estimator) {
    const auto& e = *cfg.estimator;
    MatrixX<double> D;
    if (e.null_matrix) {
      D = *e.null_matrix;
    } else {
      const std::uint64_t s = e.seed ? derive_seed(*e.seed, std::uint64_t(index)) : derive_seed(cell.seed, kNullDirection);
      D = random_null_direction(cell.instance, e.d_norm, s);
    }
    cell.estimator = EstimatorSpec<double>(cell.instance, std::move(D), e.a);
  }
  if (cfg.costs) cell.game = Game(cell.instance, make_costs(*cfg.costs, cell.instance.n(), cell.seed), cfg.kind);
  return cell;
}

Value exponent_value(const std::optional<Game>& game) {
  if (!game) return std::monostate{};
  const auto& first = game->cost(0).monomial_params();
  for (const auto& c : game->costs()) {
    if (!c.monomial_params() || c.monomial_params()->exponent != first->exponent) return std::string("mixed");
  }
  return first->exponent;
}

ExperimentRecord start_row(const ExperimentConfig& cfg, const std::vector<std::string>& columns, int index,
                           std::uint64_t seed) {
  ExperimentRecord row(columns);
  row.set("cell", std::uint64_t(index));
  row.set("seed", seed);
  row.set("n", std::uint64_t(cfg.n()));
  row.set("d", std::uint64_t(cfg.d()));
  row.set("kind", std::string(to_string(cfg.kind)));
  return row;
}

Value estimator_a(const std::optional<EstimatorSpec<double>>& est) {
  if (!est) return std::monostate{};
  return est->scaling();
}

SolverOptions solver_options(const ExperimentConfig& cfg) { return SolverOptions{cfg.solver.tol, cfg.solver.max_iter}; }

std::vector<ExperimentRecord> run_cell(const ExperimentConfig& cfg, const Cell& cell, ExperimentRecord row) {
  row.set("k", exponent_value(cell.game));
  const auto options = solver_options(cfg);
  switch (cfg.experiment) {
    case Experiment::Equilibrium: {
      const Game game = cell.game->with_estimator(cell.estimator);
      const auto eq = solve_equilibrium(game, options);
      row.set("estimator_a", estimator_a(cell.estimator));
      row.set("lambda", format_vector(eq.profile.lambdas()));
      row.set("potential", eq.potential_value);
      row.set("f", eq.estimation_cost);
      row.set("social_cost", social_cost(game, eq.profile).value);
      row.set("kkt_residual", eq.kkt_residual);
      row.set("iterations", std::uint64_t(eq.iterations));
      row.set("status", std::string(to_string(eq.status)));
      row.set("at_zero", std::uint64_t(eq.active_sets.at_zero.size()));
      row.set("interior", std::uint64_t(eq.active_sets.interior.size()));
      row.set("at_cap", std::uint64_t(eq.active_sets.at_cap.size()));
      return {row};
    }
    case Experiment::SocialOpt: {
      const Game game = cell.game->with_estimator(cell.estimator);
      const auto opt = solve_social_optimum(game, options);
      row.set("lambda_opt", format_vector(opt.lambdas()));
      row.set("social_cost", social_cost(game, opt).value);
      row.set("f", estimation_cost(game, opt).value);
      row.set("kkt_residual", social_kkt_residual(game, opt));
      return {row};
    }
    case Experiment::Pos: {
      const Game game = cell.game->with_estimator(cell.estimator);
      const auto report = price_of_stability(game, options);
      row.set("estimator_a", estimator_a(cell.estimator));
      row.set("lambda_nash", format_vector(report.nash.profile.lambdas()));
      row.set("lambda_opt", format_vector(report.social_optimum.lambdas()));
      row.set("nash_social_cost", report.nash_social_cost);
      row.set("opt_cost", report.opt_cost);
      row.set("pos", report.pos);
      row.set("bound", report.bound);
      row.set("bound_source", std::string(to_string(report.bound_source)));
      row.set("bound_satisfied", report.bound_satisfied);
      if (report.sandwich) {
        row.set("sandwich_lower_ok", report.sandwich->lower_ok);
        row.set("sandwich_upper_ok", report.sandwich->upper_ok);
        row.set("sandwich_lower_margin", report.sandwich->lower_margin);
        row.set("sandwich_upper_margin", report.sandwich->upper_margin);
        row.set("sandwich_advisory", report.sandwich->advisory);
      }
      return {row};
    }
    case Experiment::Aitken: {
      const auto cmp = aitken_compare(*cell.game, *cell.estimator, options);
      row.set("a", cell.estimator->scaling());
      row.set("d_norm", cell.estimator->null_matrix().norm());
      row.set("lambda_gls", format_vector(cmp.gls_equilibrium.profile.lambdas()));
      row.set("lambda_lue", format_vector(cmp.lue_equilibrium.profile.lambdas()));
      row.set("gls_cost", cmp.gls_cost);
      row.set("lue_cost", cmp.lue_cost);
      row.set("margin", cmp.margin);
      row.set("holds", cmp.holds);
      return {row};
    }
    case Experiment::Sweep: {
      const auto sweep = scaling_sweep(*cell.game, cell.estimator->null_matrix(), cfg.estimator->a_grid, options);
      std::vector<ExperimentRecord> rows;
      for (std::size_t j = 0; j < sweep.grid.size(); ++j) {
        ExperimentRecord r = row;
        r.set("grid_index", std::uint64_t(j));
        r.set("a", sweep.grid[j]);
        r.set("lambda", format_vector(sweep.profiles[j]));
        r.set("f", sweep.costs[j]);
        r.set("cost_monotone", sweep.monotone);
        r.set("max_cost_violation", sweep.max_violation);
        r.set("profiles_monotone", sweep.profiles_monotone);
        r.set("max_profile_violation", sweep.max_profile_violation);
        rows.push_back(std::move(r));
      }
      return rows;
    }
    case Experiment::MonteCarlo: {
      const auto& mc = cfg.montecarlo;
      std::optional<EstimatorSpec<double>> est;
      if (mc.use_estimator) est = cell.estimator;
      Profile profile = Profile::at_cap(cell.instance);
      if (mc.profile == ProfileChoice::Explicit) {
        profile = Profile(mc.explicit_profile);
      } else if (mc.profile == ProfileChoice::Equilibrium) {
        profile = solve_equilibrium(cell.game->with_estimator(est), options).profile;
      }
      const auto report = monte_carlo_validate(cell.instance, profile, est, mc.noise, mc.trials,
                                               derive_seed(cell.seed, kMonteCarlo));
      row.set("estimator_a", estimator_a(est));
      row.set("noise", std::string(to_string(mc.noise)));
      row.set("trials", std::uint64_t(report.trials));
      row.set("profile", format_vector(profile.lambdas()));
      row.set("mean_deviation", report.mean_deviation);
      row.set("covariance_deviation", report.covariance_deviation);
      return {row};
    }
    case Experiment::GradCheck: {
      std::mt19937_64 rng(derive_seed(cell.seed, kProfile));
      std::uniform_real_distribution<double> u(0.1, 0.9);
      VectorX<double> lambdas(cell.instance.n());
      for (Index i = 0; i < lambdas.size(); ++i) lambdas(i) = cell.instance.cap() * u(rng);
      const Profile profile(lambdas);
      const EstimatorSpec<double>* est = cell.estimator ? &*cell.estimator : nullptr;
      row.set("estimator_a", estimator_a(cell.estimator));
      row.set("profile", format_vector(lambdas));
      row.set("max_rel_error", max_gradient_error(cell.instance, profile, cfg.kind, est, cfg.gradcheck_step));
      return {row};
    }
  }
  return {row};
}

std::vector<ExperimentRecord> run_one(const ExperimentConfig& cfg, const std::vector<std::string>& columns, int index,
                                      bool timing, bool& failed) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t seed = derive_seed(cfg.seed, std::uint64_t(index));
  const ExperimentRecord row = start_row(cfg, columns, index, seed);
  std::vector<ExperimentRecord> rows;
  try {
    rows = run_cell(cfg, make_cell(cfg, index), row);
    for (auto& r : rows) r.set("error", std::string());
  } catch (const std::exception& e) {
    failed = true;
    ExperimentRecord bad = row;
    bad.set("error", std::string(e.what()));
    rows = {bad};
  }
  if (timing) {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (auto& r : rows) r.set("wall_time_s", secs);
  }
  return rows;
}

}  // namespace

std::vector<std::string> columns_for(Experiment experiment, bool timing) {
  auto cols = prefix();
  for (auto& c : body(experiment)) cols.push_back(std::move(c));
  cols.emplace_back("error");
  if (timing) cols.emplace_back("wall_time_s");
  return cols;
}

RunResult run(const ExperimentConfig& config, const RunOptions& options) {
  const auto columns = columns_for(config.experiment, options.timing);
  const int cells = config.cells;
  std::vector<std::vector<ExperimentRecord>> per_cell(std::size_t(cells), std::vector<ExperimentRecord>{});
  std::vector<char> failed(std::size_t(cells), 0);

  int workers = config.workers > 0 ? config.workers : int(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, cells);
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < cells; i = next++) {
      bool bad = false;
      per_cell[std::size_t(i)] = run_one(config, columns, i, options.timing, bad);
      failed[std::size_t(i)] = bad ? 1 : 0;
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  RunResult result;
  for (int i = 0; i < cells; ++i) {
    for (auto& r : per_cell[std::size_t(i)]) result.records.push_back(std::move(r));
    result.failed_cells += failed[std::size_t(i)];
  }
  return result;
}

}  // namespace lrgame::harness
