#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "penaltyflow/schedules.hpp"

using namespace penaltyflow;

namespace {

std::vector<PenaltySchedule> registered() {
  return {PenaltySchedule::power(0.0), PenaltySchedule::power(1.0),       PenaltySchedule::power(2.0),
          PenaltySchedule::power(3.5), PenaltySchedule::exponential(1.0, 0.5), PenaltySchedule::exponential(2.0, 0.0),
          PenaltySchedule::constant(5.0)};
}

}  // namespace

TEST(BetaTilde, PowerHalfWeight) { EXPECT_DOUBLE_EQ(beta_tilde(PenaltySchedule::power(2.0), 2.0, 4.0, 1.0), 2.0); }

TEST(BetaTilde, ZeroKIsBeta) {
  const auto s = PenaltySchedule::power(1.7);
  for (double t : {0.0, 0.3, 12.0}) EXPECT_DOUBLE_EQ(beta_tilde(s, 0.0, 3.0, t), s.beta(t));
}

TEST(BetaTilde, ExponentialAtZero) {
  EXPECT_DOUBLE_EQ(beta_tilde(PenaltySchedule::exponential(1.0, 0.5), 0.5, 1.0, 0.0), 0.5);
}

TEST(BetaTilde, RejectsKAtOrAboveGamma) {
  const auto s = PenaltySchedule::power(2.0);
  EXPECT_THROW(beta_tilde(s, 3.0, 3.0, 1.0), std::invalid_argument);
  EXPECT_THROW(beta_tilde(s, 4.0, 3.0, 1.0), std::invalid_argument);
  EXPECT_THROW(beta_tilde(s, -0.1, 3.0, 1.0), std::invalid_argument);
  EXPECT_THROW(beta_tilde(s, 1.0, 3.0, -1.0), std::invalid_argument);
}

TEST(VerifyGrowth, PowerTwoGammaThree) {
  const GrowthReport r = verify_growth(PenaltySchedule::power(2.0), 3.0);
  EXPECT_TRUE(r.feasible);
  EXPECT_DOUBLE_EQ(r.k_min, 2.0);
  EXPECT_DOUBLE_EQ(r.margin, 1.0);
  EXPECT_EQ(r.evidence, GrowthEvidence::proved);
  EXPECT_TRUE(r.reason.empty());
}

TEST(VerifyGrowth, PowerFourGammaThreeInfeasible) {
  const GrowthReport r = verify_growth(PenaltySchedule::power(4.0), 3.0);
  EXPECT_FALSE(r.feasible);
  EXPECT_DOUBLE_EQ(r.k_min, 4.0);
  EXPECT_NE(r.reason.find("H_beta violated: k_min=4"), std::string::npos) << r.reason;
}

TEST(VerifyGrowth, ExponentialHalfGammaOne) {
  const GrowthReport r = verify_growth(PenaltySchedule::exponential(1.0, 0.5), 1.0);
  EXPECT_TRUE(r.feasible);
  EXPECT_DOUBLE_EQ(r.k_min, 0.5);
}

TEST(VerifyGrowth, ReasonTextForTheRunExample) {
  EXPECT_EQ(verify_growth(PenaltySchedule::power(4.0), 1.0).reason, "H_beta violated: k_min=4 \xE2\x89\xA5 gamma=1");
}

TEST(VerifyGrowth, ConstantIsAdmittedButNotDivergent) {
  const GrowthReport r = verify_growth(PenaltySchedule::constant(5.0), 0.1);
  EXPECT_TRUE(r.feasible);
  EXPECT_DOUBLE_EQ(r.k_min, 0.0);
  EXPECT_FALSE(r.divergent);
}

TEST(VerifyGrowth, NonincreasingCustomScheduleRejected) {
  const auto s = PenaltySchedule::custom([](double t) { return 1.0 / (1.0 + t); },
                                         [](double t) { return -1.0 / ((1.0 + t) * (1.0 + t)); }, 0.0, false);
  const GrowthReport r = verify_growth(s, 1.0);
  EXPECT_FALSE(r.feasible);
  EXPECT_EQ(r.reason.rfind("nonincreasing schedule", 0), 0u) << r.reason;
  EXPECT_EQ(r.evidence, GrowthEvidence::grid_checked);
}

TEST(VerifyGrowth, CustomClaimIsGridChecked) {
  auto beta = [](double t) { return 1.0 + t * t; };
  auto beta_dot = [](double t) { return 2.0 * t; };
  // sup 2t / (1 + t^2) = 1 at t = 1.
  const GrowthReport ok = verify_growth(PenaltySchedule::custom(beta, beta_dot, 1.0, true), 2.0);
  EXPECT_TRUE(ok.feasible);
  EXPECT_EQ(ok.evidence, GrowthEvidence::grid_checked);
  EXPECT_NEAR(ok.grid_sup_ratio, 1.0, 1e-4);
  const GrowthReport bad = verify_growth(PenaltySchedule::custom(beta, beta_dot, 0.5, true), 2.0);
  EXPECT_FALSE(bad.feasible);
  EXPECT_NE(bad.reason.find("claimed k"), std::string::npos);
}

TEST(VerifyGrowth, RejectsBadArguments) {
  const auto s = PenaltySchedule::power(1.0);
  EXPECT_THROW(verify_growth(s, 0.0), std::invalid_argument);
  EXPECT_THROW(verify_growth(s, 1.0, -1.0), std::invalid_argument);
  EXPECT_THROW(verify_growth(s, 1.0, 0.0, TimeGrid{10.0, 1}), std::invalid_argument);
}

TEST(VerifyGrowth, BoundaryAtPlusMinusEpsilon) {
  for (double alpha : {0.5, 1.0, 2.0, 3.0}) {
    for (double t0 : {0.0, 1.0, 4.0}) {
      const double k = alpha / (1.0 + t0);
      EXPECT_TRUE(verify_growth(PenaltySchedule::power(alpha), k + 1e-6, t0).feasible) << alpha << " " << t0;
      EXPECT_FALSE(verify_growth(PenaltySchedule::power(alpha), k - 1e-6, t0).feasible) << alpha << " " << t0;
      EXPECT_FALSE(verify_growth(PenaltySchedule::power(alpha), k, t0).feasible) << alpha << " " << t0;
    }
  }
  EXPECT_TRUE(verify_growth(PenaltySchedule::exponential(1.0, 0.5), 0.5 + 1e-6).feasible);
  EXPECT_FALSE(verify_growth(PenaltySchedule::exponential(1.0, 0.5), 0.5 - 1e-6).feasible);
}

TEST(VerifyGrowth, StartTimeRelaxation) {
  const auto s = PenaltySchedule::power(4.0);
  EXPECT_FALSE(verify_growth(s, 3.0, 0.0).feasible);
  const GrowthReport r = verify_growth(s, 3.0, 1.0);
  EXPECT_TRUE(r.feasible);
  EXPECT_DOUBLE_EQ(r.k_min, 2.0);
  EXPECT_DOUBLE_EQ(r.t0, 1.0);
  // Exponential ratio is constant in t: no relaxation possible.
  EXPECT_FALSE(verify_growth(PenaltySchedule::exponential(1.0, 2.0), 1.0, 50.0).feasible);
}

// Property: analytic k_min is never below the grid sup of beta'/beta.
TEST(VerifyGrowth, AnalyticConstantDominatesGridSup) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> a(0.0, 6.0), t0(0.0, 10.0);
  for (int i = 0; i < 100; ++i) {
    const auto s = PenaltySchedule::power(a(rng));
    const double start = t0(rng);
    const GrowthReport r = verify_growth(s, 100.0, start);
    EXPECT_GE(r.k_min * (1 + 1e-12), r.grid_sup_ratio);
  }
}

TEST(Schedule, BetaPositiveAndDerivativeMatchesFiniteDifference) {
  for (const auto& s : registered()) {
    for (double t = 0.0; t <= 50.0; t += 0.37) {
      ASSERT_GT(s.beta(t), 0.0);
      const double h = 1e-5 * (1.0 + t);
      const double fd = (s.beta(t + h) - s.beta(t - h)) / (2 * h);
      if (t < h) continue;
      EXPECT_NEAR(s.beta_dot(t), fd, 1e-6 * std::max(1.0, std::abs(fd))) << to_string(s.family()) << " t=" << t;
    }
  }
}

TEST(Schedule, DivergentFlagConsistent) {
  for (const auto& s : registered()) {
    const bool grows = s.beta(1e6) > 1e3 * s.beta(0.0);
    if (s.family() == ScheduleFamily::exponential && s.rate() > 0) {
      EXPECT_TRUE(s.divergent());
      continue;
    }
    EXPECT_EQ(s.divergent(), grows) << to_string(s.family()) << " " << s.alpha();
  }
}

TEST(Schedule, RejectsBadParameters) {
  EXPECT_THROW(PenaltySchedule::power(-1.0), std::invalid_argument);
  EXPECT_THROW(PenaltySchedule::exponential(0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(PenaltySchedule::exponential(1.0, -1.0), std::invalid_argument);
  EXPECT_THROW(PenaltySchedule::constant(-2.0), std::invalid_argument);
}

TEST(Schedule, JsonDescriptors) {
  const auto p = schedule_from_json(Json::parse(R"({"family":"power","alpha":2.0})"));
  EXPECT_DOUBLE_EQ(p.beta(1.0), 4.0);
  const auto e = schedule_from_json(Json::parse(R"({"family":"exp","beta0":1.0,"k":0.5})"));
  EXPECT_DOUBLE_EQ(e.beta(2.0), std::exp(1.0));
  const auto c = schedule_from_json(Json::parse(R"({"family":"const","beta0":5.0})"));
  EXPECT_DOUBLE_EQ(c.beta(100.0), 5.0);
  EXPECT_EQ(schedule_from_json(p.to_json()).alpha(), 2.0);
  EXPECT_THROW(schedule_from_json(Json::parse(R"({"family":"power","alpha":2,"beta0":1})")), ConfigError);
  EXPECT_THROW(schedule_from_json(Json::parse(R"({"family":"log"})")), ConfigError);
  EXPECT_THROW(schedule_from_json(Json::parse(R"({"family":"power","alpha":-1})")), ConfigError);
  EXPECT_THROW(schedule_from_json(Json::parse(R"({"alpha":1})")), ConfigError);
}

TEST(VerifyGrowth, FastExponentialOverflowIsNotARejection) {
  const GrowthReport r = verify_growth(PenaltySchedule::exponential(1.0, 1.0), 3.0);
  EXPECT_TRUE(r.feasible) << r.reason;
  EXPECT_DOUBLE_EQ(r.k_min, 1.0);
}
