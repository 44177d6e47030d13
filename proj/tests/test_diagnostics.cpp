#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "penaltyflow/diagnostics.hpp"

using namespace penaltyflow;

namespace {

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

ClosedConvexSet line_x2_zero() {
  Matrix A(1, 2);
  A << 0.0, 1.0;
  return affine_subspace(A, Vector::Zero(1));
}

ProblemInstance flagship() {
  return {shifted_norm(v2(2, 1)), dist2_penalty(line_x2_zero()), 3.0, PenaltySchedule::power(2.0),
          Vector::Zero(2),        Vector::Zero(2),                v2(2, 0)};
}

IntegratorConfig config(double t_end, int samples) {
  IntegratorConfig c;
  c.t_end = t_end;
  c.sample_count = samples;
  return c;
}

const Trajectory& flagship_run() {
  static const Trajectory tr = integrate(flagship(), config(100.0, 10001));
  return tr;
}

// x = z, v = 0 with grad phi(z) = 0 and psi(z) = 0.
ProblemInstance equilibrium_problem() {
  return {shifted_norm(v2(2, 0)), dist2_penalty(line_x2_zero()), 3.0, PenaltySchedule::power(2.0), v2(2, 0), v2(0, 0),
          v2(2, 0)};
}

Trajectory equilibrium_run() {
  const auto p = equilibrium_problem();
  Trajectory tr;
  for (int i = 0; i <= 100; ++i) tr.samples.push_back(make_sample(p, 0.1 * i, v2(2, 0), v2(0, 0)));
  return tr;
}

std::vector<double> grid(double t_end, int n) {
  std::vector<double> t(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) t[static_cast<std::size_t>(i)] = t_end * i / (n - 1);
  return t;
}

}  // namespace

// --- sampled calculus ----------------------------------------------------

TEST(Numeric, CentralDifferencesOnNonuniformGrid) {
  const std::vector<double> t = {0.0, 0.1, 0.25, 0.3, 0.5, 0.8};
  std::vector<double> f;
  for (double s : t) f.push_back(2 * s * s - s + 3);
  const auto d1 = numeric::differentiate(t, f, 1);
  const auto d2 = numeric::differentiate(t, f, 2);
  for (std::size_t i = 1; i + 1 < t.size(); ++i) {
    EXPECT_NEAR(d1.value[i], 4 * t[i] - 1, 1e-12);
    EXPECT_NEAR(d2.value[i], 4.0, 1e-10);
  }
  EXPECT_TRUE(std::isnan(d1.value.front()));
  EXPECT_TRUE(std::isnan(d1.value.back()));
}

TEST(Numeric, CumulativeTrapezoidAndTailRatios) {
  const auto t = grid(10.0, 1001);
  std::vector<double> f(t.size(), 1.0);
  const auto c = numeric::cumulative_trapezoid(t, f);
  EXPECT_NEAR(c.back(), 10.0, 1e-12);
  EXPECT_NEAR(numeric::tail_ratio(t, c), 0.5, 1e-12);
  EXPECT_TRUE(numeric::nonincreasing_from(t, std::vector<double>(t.size(), 1.0), 1.0));
}

TEST(Numeric, DecreasingTrendToleratesAnEarlyBump) {
  const auto t = grid(100.0, 10001);
  std::vector<double> bump(t.size()), rising(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    bump[i] = t[i] * std::exp(-t[i] / 11.0);
    rising[i] = std::log1p(t[i]);
  }
  EXPECT_FALSE(numeric::nonincreasing_from(t, bump, 10.0));
  EXPECT_TRUE(numeric::decreasing_trend_from(t, bump, 10.0));
  EXPECT_FALSE(numeric::decreasing_trend_from(t, rising, 10.0));
}

// --- energy --------------------------------------------------------------

TEST(Energy, EquilibriumIsConstant) {
  const auto e = energy_series(equilibrium_run(), equilibrium_problem());
  for (const auto& s : e) EXPECT_DOUBLE_EQ(s.E, 0.0);
}

TEST(Energy, SampleArithmetic) {
  Sample s;
  s.v = v2(0, 2);
  s.phi = 1.0;
  s.psi = 0.5;
  s.beta = 4.0;
  EXPECT_DOUBLE_EQ(energy_of(s), 5.0);
}

TEST(Energy, FlagshipTerminalNearOptimalValue) {
  const auto e = energy_series(flagship_run(), flagship());
  EXPECT_NEAR(e.back().E, 0.5, 1e-2);
  for (const auto& s : e) {
    EXPECT_EQ(s.E, s.kinetic + s.phi_val + s.beta_val * s.psi_val);
    EXPECT_GE(s.E, *flagship().phi().lower_bound());
  }
}

TEST(Energy, CsvHeader) {
  std::ostringstream os;
  const auto e = energy_series(equilibrium_run(), equilibrium_problem());
  write_energy_csv(os, e);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "t,E,kinetic,phi,psi,beta");
}

// --- dissipation residual ------------------------------------------------

TEST(Dissipation, EquilibriumIsZero) {
  EXPECT_LE(dissipation_residual(equilibrium_run(), equilibrium_problem()).max_residual, 1e-12);
}

TEST(Dissipation, HeavyBallSecondOrderScaling) {
  const auto p = heavy_ball_instance(shifted_norm(Vector::Zero(2)), 1.0, v2(1, 0), v2(0, 0));
  const auto coarse = dissipation_residual(integrate(p, config(20.0, 2001)), p);
  const auto fine = dissipation_residual(integrate(p, config(20.0, 4001)), p);
  EXPECT_NEAR(coarse.max_step, 0.01, 1e-12);
  EXPECT_LE(coarse.max_residual, 1e-3);
  EXPECT_GE(coarse.max_residual / fine.max_residual, 3.0);
}

TEST(Dissipation, CorruptedEnergyDetected) {
  const auto& tr = flagship_run();
  auto e = energy_series(tr, flagship());
  e[e.size() / 2].E += 0.01;
  const auto r = dissipation_residual(tr, flagship(), e);
  EXPECT_GT(r.max_residual, 1e-1);
  EXPECT_GT(r.max_residual, 1e-3 * r.energy_scale);
}

TEST(Dissipation, ErrorEstimateAndEnergyScale) {
  const auto r = dissipation_residual(flagship_run(), flagship());
  EXPECT_DOUBLE_EQ(r.energy_scale, 2.5);  // phi(0) = ||(2,1)||^2 / 2, psi(0) = 0
  ASSERT_EQ(r.errors.size(), r.residuals.size());
  EXPECT_GT(r.max_error_estimate, 0.0);
  EXPECT_LE(r.max_residual, 10.0 * r.max_error_estimate);
}

TEST(Dissipation, Preconditions) {
  Trajectory tiny;
  tiny.samples = {equilibrium_run().samples[0], equilibrium_run().samples[1]};
  EXPECT_THROW(dissipation_residual(tiny, equilibrium_problem()), std::invalid_argument);
}

// --- certification -------------------------------------------------------

TEST(Certify, FlagshipSolution) {
  const auto c = certify_solution(flagship(), v2(2, 0));
  EXPECT_TRUE(c.passed) << c.failure;
  EXPECT_LE(c.max_vi_violation, 1e-10);
}

TEST(Certify, RejectsNonOptimalAndInfeasible) {
  const auto a = certify_solution(flagship(), v2(0, 0));
  EXPECT_FALSE(a.passed);
  EXPECT_NE(a.failure.find("optimality"), std::string::npos);
  const auto b = certify_solution(flagship(), v2(2, 1));
  EXPECT_FALSE(b.passed);
  EXPECT_NE(b.failure.find("membership"), std::string::npos);
}

// --- Lyapunov inequalities ----------------------------------------------

TEST(Lyapunov, EquilibriumHoldsWithEquality) {
  const auto r = lyapunov_inequality_check(equilibrium_run(), equilibrium_problem(), v2(2, 0), 2.0);
  EXPECT_TRUE(r.passed());
  EXPECT_LE(std::abs(r.chain_end.max_violation), 1e-12);
  EXPECT_LE(std::abs(r.energy_growth.max_violation), 1e-12);
}

TEST(Lyapunov, FlagshipPasses) {
  const auto r = lyapunov_inequality_check(flagship_run(), flagship(), v2(2, 0), 2.0);
  EXPECT_TRUE(r.passed()) << r.to_json().dump(2);
  ASSERT_TRUE(r.certificate);
  EXPECT_TRUE(r.certificate->passed);
  EXPECT_TRUE(r.conjugate_step.evaluated);
}

TEST(Lyapunov, UncertifiedPointIsAHardError) {
  try {
    lyapunov_inequality_check(flagship_run(), flagship(), v2(0, 0), 2.0);
    FAIL();
  } catch (const CertificationError& e) {
    EXPECT_NE(std::string(e.what()).find("optimality"), std::string::npos);
  }
}

TEST(Lyapunov, NonOptimalPointViolatesChain) {
  const auto r = lyapunov_inequality_check(flagship_run(), flagship(), v2(2, 1), 2.0, Certification::skip);
  EXPECT_FALSE(r.chain_end.passed);
  EXPECT_GT(r.chain_end.max_violation, r.chain_end.tolerance);
}

TEST(Lyapunov, RejectsBadK) {
  EXPECT_THROW(lyapunov_inequality_check(flagship_run(), flagship(), v2(2, 0), 3.0), std::invalid_argument);
}

// --- condition (H) ------------------------------------------------------

TEST(ConditionH, Dist2PowerTwoIsFinite) {
  const auto r = condition_h_check(dist2_penalty(line_x2_zero()), PenaltySchedule::power(2.0), v2(0, 1), 1e4);
  EXPECT_EQ(r.verdict, HVerdict::finite);
  EXPECT_NEAR(r.value, 0.5, 0.005);
  // Independent oracle: int_0^T dt / (2 (1+t)^2) = (1 - 1/(1+T)) / 2.
  EXPECT_NEAR(r.value, 0.5 * (1 - 1 / (1 + 1e4)), 1e-9);
}

TEST(ConditionH, Dist2PowerOneIsDivergent) {
  const auto r = condition_h_check(dist2_penalty(line_x2_zero()), PenaltySchedule::power(1.0), v2(0, 1), 1e4);
  EXPECT_EQ(r.verdict, HVerdict::divergent);
  EXPECT_NEAR(r.tail_exponent, -1.0, 1e-3);
  EXPECT_NEAR(r.value, 0.5 * std::log(1 + 1e4), 1e-8);
}

TEST(ConditionH, ZeroPenaltyIsTriviallyFinite) {
  const auto r = condition_h_check(zero_penalty(2), PenaltySchedule::power(1.0), v2(0, 0), 1e4);
  EXPECT_EQ(r.verdict, HVerdict::finite);
  EXPECT_EQ(r.value, 0.0);
}

TEST(ConditionH, QuadratureOnlyModeNearTheDeadBand) {
  ConditionHOptions o;
  o.allow_closed_form = false;
  const auto near = condition_h_check(dist2_penalty(line_x2_zero()), PenaltySchedule::power(1.02), v2(0, 1), 1e4, o);
  EXPECT_EQ(near.mode, HMode::quadrature);
  EXPECT_NEAR(near.tail_exponent, -1.02, 1e-3);
  EXPECT_EQ(near.verdict, HVerdict::inconclusive);
  const auto far = condition_h_check(dist2_penalty(line_x2_zero()), PenaltySchedule::power(2.0), v2(0, 1), 1e4, o);
  EXPECT_EQ(far.verdict, HVerdict::finite);
  const auto closed = condition_h_check(dist2_penalty(line_x2_zero()), PenaltySchedule::power(1.02), v2(0, 1), 1e4);
  EXPECT_EQ(closed.mode, HMode::closed_form);
  EXPECT_EQ(closed.verdict, HVerdict::finite);
}

TEST(ConditionH, InfiniteIntegrandIsLocated) {
  const Vector a = v2(1, 0);
  // psi*(p / beta) is finite only once beta(t) >= 2.
  const auto r = condition_h_check(huber_hinge_penalty(a, 1.0, 0.5), PenaltySchedule::power(1.0), 2.0 * a, 100.0);
  EXPECT_EQ(r.verdict, HVerdict::divergent);
  ASSERT_TRUE(r.infinite_at);
  EXPECT_LT(*r.infinite_at, 1.0);
}

TEST(ConditionH, HuberClosedForm) {
  const Vector a = v2(1, 0);
  const auto psi = huber_hinge_penalty(a, 1.0, 0.5);
  // beta [psi*(p/beta) - sigma(p/beta)] = delta lambda^2 / (2 beta) for p = lambda a.
  const auto r = condition_h_check(psi, PenaltySchedule::power(3.0), 0.5 * a, 1e4);
  EXPECT_EQ(r.verdict, HVerdict::finite);
  EXPECT_NEAR(r.value, 0.5 * 0.25 / 2.0 * 0.5, 1e-6);  // int (1+t)^-3 = 1/2
  ASSERT_TRUE(r.closed_form_total);
  EXPECT_NEAR(*r.closed_form_total, 0.03125, 1e-12);
}

TEST(ConditionH, RequiresNormalConeRangeAndClosedForm) {
  EXPECT_THROW(condition_h_check(dist2_penalty(line_x2_zero()), PenaltySchedule::power(2.0), v2(1, 0), 10.0),
               std::invalid_argument);
  const SmoothConvexFunction opaque(2, "opaque", [](const Vector& x) { return 0.5 * x[1] * x[1]; },
                                    [](const Vector& x) -> Vector { return v2(0, x[1]); }, {1.0, 0.0, 0.0});
  const PenaltyFunction psi(opaque, line_x2_zero());
  EXPECT_THROW(condition_h_check(psi, PenaltySchedule::power(2.0), v2(0, 1), 10.0), ConjugateUnavailable);
}

TEST(ConditionH, ThreeFamiliesAgainstClosedForm) {
  for (double alpha : {1.5, 2.0, 3.0}) {
    const auto r = condition_h_check(dist2_penalty(line_x2_zero()), PenaltySchedule::power(alpha), v2(0, 1), 1e4);
    EXPECT_NEAR(r.value, 1.0 / (2.0 * (alpha - 1.0)), 0.01 / (2.0 * (alpha - 1.0))) << alpha;
  }
  const auto e = condition_h_check(dist2_penalty(line_x2_zero()), PenaltySchedule::exponential(2.0, 0.5), v2(0, 1), 100.0);
  EXPECT_EQ(e.verdict, HVerdict::finite);
  EXPECT_NEAR(e.value, 0.5 / (2.0 * 0.5) * (1 - std::exp(-50.0)), 1e-9);
  const auto c = condition_h_check(dist2_penalty(line_x2_zero()), PenaltySchedule::constant(2.0), v2(0, 1), 100.0);
  EXPECT_EQ(c.verdict, HVerdict::divergent);
}

TEST(ConditionH, IntegrandNonnegative) {
  const std::vector<std::pair<PenaltyFunction, Vector>> cases = {
      {dist2_penalty(line_x2_zero()), v2(0, -3)},
      {dist2_penalty(halfspace(v2(1, 1), 1)), v2(2, 2)},
      {dist2_penalty(ball(v2(0, 0), 1)), v2(-1, 2)},
      {huber_hinge_penalty(v2(1, 2), 0.5, 0.3), v2(0.5, 1)},
      {zero_penalty(2), v2(0, 0)}};
  for (const auto& [psi, p] : cases) {
    for (double beta = 0.5; beta < 1e5; beta *= 1.7) {
      const ExtendedReal g = conjugate_gap_integrand(psi, p, beta);
      if (g.is_finite()) {
        EXPECT_GE(g.value(), -1e-12) << psi.base().kind();
      }
    }
    const auto r = condition_h_check(psi, PenaltySchedule::power(2.0), p, 1e3);
    EXPECT_GE(r.min_integrand, -1e-12) << psi.base().kind();
  }
}

TEST(ConditionH, VerdictInvariantUnderConeScaling) {
  const std::vector<PenaltySchedule> schedules = {PenaltySchedule::power(1.0), PenaltySchedule::power(2.0),
                                                  PenaltySchedule::power(1.5), PenaltySchedule::exponential(1.0, 0.5),
                                                  PenaltySchedule::constant(3.0)};
  const std::vector<std::pair<PenaltyFunction, Vector>> cases = {{dist2_penalty(line_x2_zero()), v2(0, 1)},
                                                                 {dist2_penalty(ball(v2(0, 0), 1)), v2(1, 1)},
                                                                 {dist2_penalty(halfspace(v2(1, 1), 1)), v2(1, 1)}};
  for (const auto& [psi, p] : cases) {
    for (const auto& s : schedules) {
      for (bool closed : {true, false}) {
        ConditionHOptions o;
        o.allow_closed_form = closed;
        const HVerdict base = condition_h_check(psi, s, p, 1e4, o).verdict;
        for (double c : {0.5, 2.0, 10.0}) {
          EXPECT_EQ(condition_h_check(psi, s, c * p, 1e4, o).verdict, base)
              << psi.zero_set().kind() << " " << to_string(s.family()) << " c=" << c;
        }
        // beta~ = (1 - k/gamma) beta with k = 2, gamma = 3.
        ConditionHOptions tilde = o;
        tilde.beta_scale = 1.0 / 3.0;
        EXPECT_EQ(condition_h_check(psi, s, p, 1e4, tilde).verdict, base);
      }
    }
  }
}

TEST(ConditionH, IntegrandCsv) {
  std::ostringstream os;
  write_condition_h_csv(os, dist2_penalty(line_x2_zero()), PenaltySchedule::power(2.0), v2(0, 1), 10.0, 5);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "t,integrand");
  std::getline(is, line);
  EXPECT_EQ(line, "0,0.5");
}

// --- quasi-Fejer monitor -------------------------------------------------

TEST(QuasiFejer, DecayingExponential) {
  const auto t = grid(20.0, 2001);
  std::vector<double> F, G(t.size(), 0.0);
  for (double s : t) F.push_back(std::exp(-s));
  const auto r = quasi_fejer_monitor(t, F, G, FejerOrder::first, 1.0);
  EXPECT_EQ(r.verdict, FejerVerdict::limit_plausible);
  EXPECT_NEAR(r.limit_estimate, 0.0, 1e-8);
}

TEST(QuasiFejer, SineViolates) {
  const auto t = grid(20.0, 2001);
  std::vector<double> F, G(t.size(), 0.0);
  for (double s : t) F.push_back(std::sin(s));
  EXPECT_EQ(quasi_fejer_monitor(t, F, G, FejerOrder::first, 1.0).verdict, FejerVerdict::violated);
}

TEST(QuasiFejer, SlowDriftIsInconclusive) {
  // F' = -1/(1+t) <= 0 holds but F = -log(1+t) has no limit.
  const auto t = grid(100.0, 2001);
  std::vector<double> F, G(t.size(), 0.0);
  for (double s : t) F.push_back(-std::log1p(s));
  EXPECT_EQ(quasi_fejer_monitor(t, F, G, FejerOrder::first, 1.0).verdict, FejerVerdict::inconclusive);
}

TEST(QuasiFejer, FlagshipAnchorSecondOrder) {
  const auto& tr = flagship_run();
  const auto p = flagship();
  const double k = 2.0;
  const Vector z = v2(2, 0);
  const Vector dir = -p.phi().gradient(z);
  const auto t = sample_times(tr);
  std::vector<double> F, G;
  for (const auto& s : tr.samples) {
    F.push_back(0.5 * (s.x - z).squaredNorm());
    const double bt = (1.0 - k / p.gamma()) * s.beta;
    G.push_back(s.v.squaredNorm() + conjugate_gap_integrand(p.psi(), dir, bt).value());
  }
  const auto r = quasi_fejer_monitor(t, F, G, FejerOrder::second, p.gamma());
  EXPECT_EQ(r.verdict, FejerVerdict::limit_plausible) << r.to_json().dump();
}

TEST(QuasiFejer, GridMismatch) {
  const auto t = grid(1.0, 11);
  const std::vector<double> F(11, 0.0), G(10, 0.0);
  EXPECT_THROW(quasi_fejer_monitor(t, F, G, FejerOrder::first, 1.0), std::invalid_argument);
}

// --- convergence report --------------------------------------------------

TEST(Convergence, FlagshipTerminalMetrics) {
  const auto r = convergence_report(flagship_run(), flagship(), v2(2, 0), {2.0});
  EXPECT_LE(r.beta_psi_terminal, 1e-2);
  EXPECT_LE(r.velocity_terminal, 1e-2);
  EXPECT_LE(r.phi_gap_terminal, 1e-2);
  EXPECT_LE(r.distance_terminal, 5e-2);
  EXPECT_LE(r.integral_beta_psi_tail_ratio, 0.05);
  EXPECT_LE(r.integral_velocity_sq_tail_ratio, 0.05);
  EXPECT_TRUE(r.energy_limit_plausible);
}

TEST(Convergence, StrongConvexity) {
  const auto r = convergence_report(flagship_run(), flagship(), v2(2, 0), {2.0});
  EXPECT_LE(r.integral_distance_sq_tail_ratio, 0.05);
  EXPECT_LE(r.distance_terminal, 5e-2);
  EXPECT_TRUE(r.distance_decreasing_last_decade);
  EXPECT_TRUE(r.distance_limit_plausible);
}

TEST(Convergence, EquilibriumIsAllZero) {
  const auto r = convergence_report(equilibrium_run(), equilibrium_problem(), v2(2, 0));
  EXPECT_EQ(r.phi_gap_terminal, 0.0);
  EXPECT_EQ(r.beta_psi_terminal, 0.0);
  EXPECT_EQ(r.velocity_terminal, 0.0);
  EXPECT_EQ(r.distance_terminal, 0.0);
  EXPECT_EQ(r.integral_beta_psi, 0.0);
  EXPECT_EQ(r.integral_velocity_sq, 0.0);
  EXPECT_EQ(r.integral_distance_sq, 0.0);
}

TEST(Convergence, PartialIntegralsNonnegativeAndNondecreasing) {
  const auto& tr = flagship_run();
  const auto t = sample_times(tr);
  std::vector<double> bp, vs;
  for (const auto& s : tr.samples) {
    bp.push_back(s.beta * s.psi);
    vs.push_back(s.v.squaredNorm());
  }
  for (const auto& c : {numeric::cumulative_trapezoid(t, bp), numeric::cumulative_trapezoid(t, vs)}) {
    for (std::size_t i = 1; i < c.size(); ++i) ASSERT_GE(c[i], c[i - 1]);
  }
}

TEST(Convergence, ShortHorizonNotConverged) {
  const auto tr = integrate(flagship(), config(1.0, 101));
  const auto r = convergence_report(tr, flagship(), v2(2, 0));
  EXPECT_GT(r.distance_terminal, 5e-2);
  EXPECT_FALSE(r.distance_limit_plausible);
}
