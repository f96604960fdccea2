#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "survml/data.hpp"
#include "survml/estimators.hpp"

using namespace survml;

namespace {

const std::vector<SurvivalTarget> kFixture{{2, 1}, {3, 1}, {3, 1}, {5, 0}};

std::vector<SurvivalTarget> synthetic(std::size_t n, std::uint64_t seed, double censor = 0.3) {
  SynthConfig cfg;
  cfg.n = n;
  cfg.d = 2;
  cfg.beta = {0.5, -0.5};
  cfg.censor_rate = censor;
  cfg.seed = seed;
  return synth_cohort(cfg).cohort.targets;
}

}  // namespace

TEST_SUITE("estimators") {
  TEST_CASE("step function is right-continuous with left limits") {
    const StepFunction f({1.0, 2.0}, {0.5, 0.25}, 1.0);
    CHECK(f(0.5) == 1.0);
    CHECK(f(1.0) == 0.5);
    CHECK(f.left_limit(1.0) == 1.0);
    CHECK(f(1.5) == 0.5);
    CHECK(f(10.0) == 0.25);
    CHECK(f.is_survival_curve());
    CHECK_THROWS(StepFunction({2.0, 1.0}, {0.5, 0.25}, 1.0));
    CHECK(f.to_csv().rfind("time,value\n", 0) == 0);
  }

  TEST_CASE("Kaplan-Meier fixture") {
    const StepFunction s = kaplan_meier(kFixture);
    CHECK(s(2) == 0.75);
    CHECK(s(3) == 0.25);
    CHECK(s(5) == 0.25);
    CHECK(s(1.9) == 1.0);
    CHECK(s.is_survival_curve());
  }

  TEST_CASE("Kaplan-Meier special cases") {
    const std::vector<SurvivalTarget> censored{{1, 0}, {2, 0}, {3, 0}};
    const StepFunction all_c = kaplan_meier(censored);
    CHECK(all_c(0) == 1.0);
    CHECK(all_c(100) == 1.0);
    const std::vector<SurvivalTarget> events{{1, 1}, {2, 1}, {3, 1}, {4, 1}};
    const StepFunction s = kaplan_meier(events);
    for (int k = 1; k <= 4; ++k) CHECK(s(k) == (4.0 - k) / 4.0);
    CHECK_THROWS_AS(kaplan_meier(std::vector<SurvivalTarget>{}), DataError);
  }

  TEST_CASE("Nelson-Aalen fixture") {
    const StepFunction h = nelson_aalen(kFixture);
    CHECK(h(2) == 0.25);
    CHECK(h(3) == 0.25 + 2.0 / 3.0);
    CHECK(h.is_cumulative_hazard());
    const std::vector<SurvivalTarget> censored{{1, 0}, {2, 0}};
    CHECK(nelson_aalen(censored)(5) == 0.0);
    const std::vector<SurvivalTarget> single{{1, 1}};
    CHECK(nelson_aalen(single)(1) == 1.0);
  }

  TEST_CASE("censoring survival fixture") {
    const StepFunction g = censoring_survival(kFixture);
    CHECK(g(4.99) == 1.0);
    CHECK(g(5) == 0.0);
    const std::vector<SurvivalTarget> events{{1, 1}, {2, 1}};
    CHECK(censoring_survival(events)(10) == 1.0);
    const std::vector<SurvivalTarget> censored{{1, 0}, {2, 0}, {3, 0}, {4, 0}};
    const StepFunction gc = censoring_survival(censored);
    for (int k = 1; k <= 4; ++k) CHECK(gc(k) == (4.0 - k) / 4.0);
  }

  TEST_CASE("censoring survival of flipped events equals Kaplan-Meier without cross ties") {
    Rng rng(4);
    std::vector<SurvivalTarget> t;
    for (int i = 0; i < 300; ++i) t.push_back({1.0 + uniform01(rng), uniform01(rng) < 0.6 ? 1 : 0});
    std::vector<SurvivalTarget> flipped = t;
    for (auto& s : flipped) s.event = 1 - s.event;
    const StepFunction g = censoring_survival(t);
    const StepFunction km = kaplan_meier(flipped);
    for (const auto& s : t) CHECK(g(s.time) == doctest::Approx(km(s.time)).epsilon(1e-12));
  }

  TEST_CASE("estimators agree with brute-force oracles on tied data") {
    std::mt19937_64 rng(12);
    for (int rep = 0; rep < 20; ++rep) {
      const auto inst = oracle::random_instance(rng, 60, 0.4, 15, 3);
      const StepFunction km = kaplan_meier(inst.targets);
      const StepFunction na = nelson_aalen(inst.targets);
      const StepFunction g = censoring_survival(inst.targets);
      for (double t = 0.0; t <= 8.0; t += 0.25) {
        CHECK(km(t) == doctest::Approx(oracle::km_at(inst.targets, t)).epsilon(1e-12));
        CHECK(na(t) == doctest::Approx(oracle::nelson_aalen_at(inst.targets, t)).epsilon(1e-12));
        CHECK(g(t) == doctest::Approx(oracle::censor_km_at(inst.targets, t)).epsilon(1e-12));
        CHECK(g.left_limit(t) == doctest::Approx(oracle::censor_km_at(inst.targets, t, true)).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("Kaplan-Meier and exp(-Nelson-Aalen) agree within 0.05") {
    const auto t = synthetic(400, 3);
    const StepFunction km = kaplan_meier(t);
    const StepFunction na = nelson_aalen(t);
    for (double u : km.times()) CHECK(std::abs(km(u) - std::exp(-na(u))) <= 0.05);
  }

  TEST_CASE("Breslow fixture and identities") {
    const std::vector<SurvivalTarget> two{{1, 1}, {2, 1}};
    const std::vector<double> zero{0.0, 0.0};
    const StepFunction h0 = breslow_baseline(two, zero);
    CHECK(h0(1) == 0.5);
    CHECK(h0(2) == 1.5);

    const auto t = synthetic(300, 5);
    const std::vector<double> eta0(t.size(), 0.0);
    const StepFunction b = breslow_baseline(t, eta0);
    const StepFunction na = nelson_aalen(t);
    REQUIRE(b.times() == na.times());
    for (std::size_t k = 0; k < b.size(); ++k) CHECK(std::abs(b.values()[k] - na.values()[k]) <= 1e-12);

    Rng rng(1);
    std::vector<double> eta(t.size()), shifted(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      eta[i] = standard_normal(rng);
      shifted[i] = eta[i] + 0.7;
    }
    const StepFunction h = breslow_baseline(t, eta);
    const StepFunction hs = breslow_baseline(t, shifted);
    for (std::size_t k = 0; k < h.size(); ++k) {
      CHECK(hs.values()[k] == doctest::Approx(h.values()[k] * std::exp(-0.7)).epsilon(1e-12));
    }
    const StepFunction s1 = subject_survival(h, eta[0]);
    const StepFunction s2 = subject_survival(hs, shifted[0]);
    for (std::size_t k = 0; k < s1.size(); ++k) CHECK(s1.values()[k] == doctest::Approx(s2.values()[k]).epsilon(1e-12));

    const std::vector<SurvivalTarget> censored{{1, 0}, {2, 0}};
    CHECK(breslow_baseline(censored, zero)(5) == 0.0);
    CHECK_THROWS(breslow_baseline(two, std::vector<double>{0.0}));
    CHECK_THROWS(breslow_baseline(two, std::vector<double>{0.0, std::nan("")}));
  }

  TEST_CASE("Cox calibration") {
    SynthConfig cfg;
    cfg.n = 5000;
    cfg.d = 2;
    cfg.beta = {1.0, 0.5};
    cfg.censor_rate = 0.3;
    cfg.seed = 17;
    const auto s = synth_cohort(cfg);
    const CoxCalibration cal = cox_calibrate(s.linear_predictor, s.cohort.targets);
    CHECK(cal.beta >= 0.9);
    CHECK(cal.beta <= 1.1);

    std::vector<double> neg = s.linear_predictor;
    for (double& v : neg) v = -v;
    const CoxCalibration cal_neg = cox_calibrate(neg, s.cohort.targets);
    CHECK(cal_neg.beta == doctest::Approx(-cal.beta).epsilon(1e-9));
    for (std::size_t k = 0; k < cal.baseline.size(); k += 97) {
      CHECK(cal_neg.baseline.values()[k] == doctest::Approx(cal.baseline.values()[k]).epsilon(1e-9));
    }

    const std::vector<double> flat(s.cohort.size(), 2.0);
    CHECK(cox_calibrate(flat, s.cohort.targets).beta == 0.0);

    const std::vector<SurvivalTarget> one_event{{1, 1}, {2, 0}};
    CHECK_THROWS_AS(cox_calibrate(std::vector<double>{1.0, 2.0}, one_event), FitError);
  }
}
