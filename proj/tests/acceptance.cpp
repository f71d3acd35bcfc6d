// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>

#include "lrgame/harness/config.hpp"
#include "lrgame/harness/record.hpp"
#include "lrgame/harness/runner.hpp"
#include "support.hpp"

using namespace lrgame;
using namespace lrgame::testing;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

constexpr auto kTrace = ScalarizationKind::Trace;
constexpr auto kFrob = ScalarizationKind::FrobeniusSquared;

Outcome gradient_correctness() {
  Outcome out;
  double worst = 0.0;
  int instances = 0;
  for (std::uint64_t s = 0; instances < 100; ++s) {
    const Index d = 1 + Index(s % 3);
    const Index n = d + 1 + Index((s / 3) % Index(8 - d));  // d < n <= 8
    const auto inst = random_instance<double>(n, d, FeatureDistribution::Gaussian, 10000 + s);
    const auto p = ActionProfile<double>(random_interior_profile(20000 + s, n, inst.cap()));
    const EstimatorSpec<double> est(inst, random_null_direction(inst, 0.5 + 0.01 * double(s % 50), 30000 + s),
                                    0.1 + 0.009 * double(s % 100));
    worst = std::max({worst, max_gradient_error(inst, p, kTrace), max_gradient_error(inst, p, kFrob),
                      max_gradient_error(inst, p, kTrace, &est)});
    ++instances;
  }
  out.require(worst <= 1e-5, "max relative error " + fmt("%.3g", worst));
  if (out.ok) out.detail = "100 instances, max relative error " + fmt("%.3g", worst);
  return out;
}

Outcome equilibrium_oracles() {
  Outcome out;
  const double t = std::pow(12.0, -0.25);
  const auto b = instance_b();
  const auto bp = instance_b(3.0);
  const auto pg_b = solve_equilibrium(b);
  const auto br_b = best_response_dynamics(b, ActionProfile<double>::at_cap(b.instance()));
  const auto pg_bp = solve_equilibrium(bp);
  const auto br_bp = best_response_dynamics(bp, ActionProfile<double>::at_cap(bp.instance()));
  const double err_b = (pg_b.profile.lambdas().array() - 0.5).abs().maxCoeff();
  const double err_bp = (pg_bp.profile.lambdas().array() - t).abs().maxCoeff();
  const double gap = std::max((pg_b.profile.lambdas() - br_b.profile.lambdas()).cwiseAbs().maxCoeff(),
                              (pg_bp.profile.lambdas() - br_bp.profile.lambdas()).cwiseAbs().maxCoeff());
  out.require(err_b <= 1e-8, "Instance B profile error " + fmt("%.3g", err_b));
  out.require(std::abs(pg_b.potential_value - 1.5) <= 1e-8, "Instance B potential " + fmt("%.12g", pg_b.potential_value));
  out.require(err_bp <= 1e-8, "cubic profile error " + fmt("%.3g", err_bp));
  out.require(gap <= 1e-6, "solver gap " + fmt("%.3g", gap));
  if (out.ok) out.detail = "profile errors " + fmt("%.2g", err_b) + ", " + fmt("%.2g", err_bp) + ", solver gap " + fmt("%.2g", gap);
  return out;
}

Outcome kkt_certification() {
  Outcome out;
  double worst_kkt = 0.0, worst_dev = 0.0;
  int certified = 0;
  auto certify = [&](const GameSpec<double>& spec) {
    for (const auto& eq : {solve_equilibrium(spec), best_response_dynamics(spec, ActionProfile<double>::at_cap(spec.instance()))}) {
      if (eq.status != EquilibriumStatus::NonTrivial) continue;
      worst_kkt = std::max(worst_kkt, eq.kkt_residual);
      worst_dev = std::max(worst_dev, best_unilateral_improvement(spec, eq.profile));
      ++certified;
    }
  };
  for (std::uint64_t s = 0; s < 40; ++s) certify(random_convex_game(40000 + s, 2 + Index(s % 7), 1 + Index(s % 2)));
  for (std::uint64_t s = 0; s < 20; ++s) {
    certify(random_monomial_game(41000 + s, 3 + Index(s % 4), 1 + Index(s % 3), 2.0 + double(s % 3), kFrob));
  }
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto spec = random_monomial_game(42000 + s, 4 + Index(s % 3), 2, 2.5);
    certify(spec.with_estimator(EstimatorSpec<double>(spec.instance(),
                                                      random_null_direction(spec.instance(), 0.5, s), 1.0)));
  }
  out.require(worst_kkt <= 1e-8, "KKT residual " + fmt("%.3g", worst_kkt));
  out.require(worst_dev <= 1e-7, "grid improvement " + fmt("%.3g", worst_dev));
  if (out.ok) {
    out.detail = std::to_string(certified) + " equilibria, max residual " + fmt("%.2g", worst_kkt) +
                 ", max grid improvement " + fmt("%.2g", worst_dev);
  }
  return out;
}

Outcome pos_bounds() {
  Outcome out;
  double worst_general = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Index n = 2 + Index(s % 7);
    const Index d = 1 + Index(s % 3);
    if (n < d) continue;
    const auto report = price_of_stability(random_convex_game(50000 + s, n, d));
    worst_general = std::max(worst_general, report.pos - double(n));
  }
  out.require(worst_general <= 1e-9, "general bound exceeded by " + fmt("%.3g", worst_general));
  double worst_monomial = -1e300;
  for (double k : {1.0, 2.0, 3.0, 4.0}) {
    for (auto kind : {kTrace, kFrob}) {
      for (std::uint64_t s = 0; s < 100; ++s) {
        const Index n = 2 + Index(s % 7);
        const Index d = 1 + Index(s % 2);
        const auto report = price_of_stability(random_monomial_game(51000 + s + std::uint64_t(k) * 1000, n, d, k, kind));
        const double bound = kind == kTrace ? std::pow(double(n), 1.0 / (k + 1.0)) : std::pow(double(n), 2.0 / (k + 2.0));
        worst_monomial = std::max(worst_monomial, report.pos - bound);
        if (report.bound != bound) out.require(false, "bound selection for k=" + fmt("%g", k));
      }
    }
  }
  out.require(worst_monomial <= 1e-9, "monomial bound exceeded by " + fmt("%.3g", worst_monomial));
  const auto b = price_of_stability(instance_b());
  out.require(std::abs(b.pos - 1.049934208246) <= 1e-8, "Instance B pos " + fmt("%.12g", b.pos));
  out.require(b.pos <= std::cbrt(2.0), "Instance B above 2^(1/3)");
  if (out.ok) {
    out.detail = "Instance B pos " + fmt("%.6f", b.pos) + " <= " + fmt("%.6f", std::cbrt(2.0)) +
                 ", 900 random instances within their bounds";
  }
  return out;
}

Outcome appendix_c() {
  Outcome out;
  int instances = 0;
  double worst_lower = 1e300, worst_upper = 1e300, min_lambda = 1e300;
  for (double k : {3.0, 4.0}) {
    for (std::uint64_t s = 0; s < 25; ++s) {
      const auto spec = random_monomial_game(60000 + s + std::uint64_t(k) * 100, 2 + Index(s % 6), 1 + Index(s % 3), k);
      if (spec.n() < spec.instance().d() || !check_superconvexity(spec)) continue;
      const auto nash = solve_equilibrium(spec);
      const auto opt = solve_social_optimum(spec);
      const auto sw = sandwich_check(spec, nash.profile, opt);
      worst_lower = std::min(worst_lower, sw.lower_margin);
      worst_upper = std::min(worst_upper, sw.upper_margin);
      min_lambda = std::min(min_lambda, nash.profile.lambdas().minCoeff());
      out.require(sw.lower_ok && sw.upper_ok, "sandwich fails for seed " + std::to_string(s));
      ++instances;
    }
  }
  out.require(min_lambda > 0.0, "equilibrium coordinate at zero");

  double worst_t = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto spec = random_monomial_game(61000 + s, 3 + Index(s % 5), 1 + Index(s % 3), 3.0 + double(s % 2));
    const Vec lo = random_interior_profile(62000 + s, spec.n(), 0.6 * spec.cap());
    const Vec hi = lo + random_interior_profile(63000 + s, spec.n(), 0.4 * spec.cap());
    const Vec diff = fixed_point_map(spec, ActionProfile<double>(hi)).lambdas() -
                     fixed_point_map(spec, ActionProfile<double>(lo)).lambdas();
    worst_t = std::max(worst_t, diff.maxCoeff());
  }
  out.require(worst_t <= 1e-12, "T increased by " + fmt("%.3g", worst_t));

  const auto bp = instance_b(3.0);
  const auto eq = solve_equilibrium(bp);
  const Vec t_eq = fixed_point_map(bp, eq.profile).lambdas();
  const double err = (t_eq - std::sqrt(2.0) * eq.profile.lambdas()).cwiseAbs().maxCoeff();
  out.require(err <= 1e-8, "T(lambda*) error " + fmt("%.3g", err));
  out.require(instances >= 20, "only " + std::to_string(instances) + " superconvex instances");
  if (out.ok) {
    out.detail = std::to_string(instances) + " sandwiches, min margins " + fmt("%.2g", worst_lower) + "/" +
                 fmt("%.2g", worst_upper) + ", T monotone on 100 pairs, T(lambda*) error " + fmt("%.2g", err);
  }
  return out;
}

Outcome strategic_aitken() {
  Outcome out;
  const auto cmp = aitken_compare(instance_b(), half_split_estimator());
  out.require(std::abs(cmp.gls_cost - 1.0) <= 1e-8, "GLS cost " + fmt("%.12g", cmp.gls_cost));
  out.require(std::abs(cmp.lue_cost - std::cbrt(4.0)) <= 1e-6, "LUE cost " + fmt("%.12g", cmp.lue_cost));
  out.require(cmp.holds, "Instance B comparison fails");
  double worst_margin = 1e300;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Index n = 3 + Index(s % 4);
    const Index d = 1 + Index(s % 2);
    const auto spec = random_monomial_game(70000 + s, n, d, 2.0 + double(s % 2));
    const EstimatorSpec<double> est(spec.instance(), random_null_direction(spec.instance(), 0.3 + 0.05 * double(s), s),
                                    0.5 + 0.025 * double(s));
    worst_margin = std::min(worst_margin, aitken_compare(spec, est).margin);
  }
  out.require(worst_margin >= -1e-9, "random margin " + fmt("%.3g", worst_margin));
  const auto sweep = scaling_sweep(instance_b(), mat({{0.5}, {-0.5}}), 11);
  out.require(sweep.monotone, "sweep cost drops by " + fmt("%.3g", sweep.max_violation));
  out.require(sweep.profiles_monotone, "sweep profile drops by " + fmt("%.3g", sweep.max_profile_violation));
  if (out.ok) {
    out.detail = "LUE cost " + fmt("%.8f", cmp.lue_cost) + ", min random margin " + fmt("%.3g", worst_margin) +
                 ", 11-point sweep monotone in f and every lambda_i";
  }
  return out;
}

Outcome estimator_soundness() {
  Outcome out;
  double worst_eig = 1e300;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Index d = 1 + Index(s % 3);
    const Index n = d + 1 + Index(s % 4);
    const auto inst = random_instance<double>(n, d, FeatureDistribution::Gaussian, 80000 + s);
    const auto p = ActionProfile<double>(random_interior_profile(81000 + s, n, inst.cap()));
    const EstimatorSpec<double> est(inst, random_null_direction(inst, 0.2 + 0.02 * double(s % 40), s), double(s) / 99.0);
    worst_eig = std::min(worst_eig, min_eigenvalue(lue_covariance(inst, p, est) - gls_covariance(inst, p)));
  }
  out.require(worst_eig >= -1e-10, "min eigenvalue " + fmt("%.3g", worst_eig));

  const auto id = identity_instance();
  const auto p = profile({1, 1});
  const auto gls = monte_carlo_validate(id, p, std::nullopt, NoiseKind::Gaussian, 100000, 90001);
  // The identity design has no unbiased perturbation besides D = 0.
  const EstimatorSpec<double> trivial(id, Mat::Zero(2, 2), 1.0);
  const auto lue_id = monte_carlo_validate(id, p, std::optional(trivial), NoiseKind::Gaussian, 100000, 90002);
  const RegressionInstance<double> augmented(mat({{1, 0}, {0, 1}, {1, 1}}), 1.0, vec({1.0, 2.0}));
  const EstimatorSpec<double> est(augmented, random_null_direction(augmented, 1.0, 90003), 1.0);
  const auto lue = monte_carlo_validate(augmented, profile({1, 1, 1}), std::optional(est), NoiseKind::Gaussian, 100000, 90004);
  const double dev = std::max({gls.covariance_deviation, lue_id.covariance_deviation, lue.covariance_deviation});
  out.require(dev <= 0.05, "Monte Carlo covariance deviation " + fmt("%.3g", dev));
  if (out.ok) {
    out.detail = "min eigenvalue " + fmt("%.2g", worst_eig) + ", Monte Carlo deviations GLS " +
                 fmt("%.3f", gls.covariance_deviation) + ", LUE " + fmt("%.3f", lue_id.covariance_deviation) +
                 " (identity), " + fmt("%.3f", lue.covariance_deviation) + " (augmented, nonzero D)";
  }
  return out;
}

Outcome trivial_detection() {
  Outcome out;
  const auto spec = GameSpec<double>::monomial(identity_instance(), 1.0, 2.0, kTrace);
  const auto zero = profile({0, 0});
  out.require(is_trivial_equilibrium(spec, zero), "(0, 0) not reported trivial");
  int finite = 0;
  for (Index i = 0; i < 2; ++i) {
    for (int j = 0; j <= 1000; ++j) finite += player_cost(spec, i, zero.with(i, j / 1000.0)).finite ? 1 : 0;
  }
  out.require(finite == 0, std::to_string(finite) + " deviations with finite cost");
  out.require(!is_trivial_equilibrium(spec, profile({1, 0})), "(1, 0) reported trivial");
  if (out.ok) out.detail = "(0, 0) trivial; 2002 unilateral deviations all keep infinite cost";
  return out;
}

Outcome determinism() {
  Outcome out;
  int configs = 0;
  for (const auto& entry : std::filesystem::directory_iterator(LRGAME_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    const auto cfg = harness::load_config(entry.path().string());
    for (auto format : {harness::Format::Csv, harness::Format::JsonLines}) {
      std::ostringstream first, second;
      harness::emit(harness::run(cfg).records, format, first);
      harness::emit(harness::run(cfg).records, format, second);
      out.require(first.str() == second.str(), entry.path().filename().string() + " differs between runs");
    }
    ++configs;
  }
  out.require(configs > 0, "no configs found");
  if (out.ok) out.detail = std::to_string(configs) + " configs, csv and jsonl bodies byte-identical across reruns";
  return out;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> check;
  };
  const Criterion criteria[] = {
      {1, "gradient correctness", 10, gradient_correctness},
      {2, "equilibrium oracle equivalence", 1, equilibrium_oracles},
      {3, "KKT certification", 30, kkt_certification},
      {4, "price of stability bounds", 120, pos_bounds},
      {5, "fixed-point map and sandwich", 60, appendix_c},
      {6, "strategic Aitken", 120, strategic_aitken},
      {7, "estimator soundness", 60, estimator_soundness},
      {8, "trivial-equilibrium detection", 1, trivial_detection},
      {9, "determinism", 0, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome result;
    try {
      result = c.check();
    } catch (const std::exception& e) {
      result.ok = false;
      result.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0) result.require(secs <= c.budget_s, "runtime " + fmt("%.2f", secs) + " s over budget");
    failures += result.ok ? 0 : 1;
    std::printf("%s criterion %d (%s): %s [%.2f s]\n", result.ok ? "PASS" : "FAIL", c.id, c.name,
                result.detail.c_str(), secs);
  }
  return failures == 0 ? 0 : 1;
}
