#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "survml/losses.hpp"

using namespace survml;

namespace {

struct Batch {
  std::vector<SurvivalTarget> targets;
  std::vector<double> weights;
  std::vector<double> pred;
};

Batch random_batch(std::mt19937_64& rng, std::size_t n, bool ties) {
  std::uniform_real_distribution<double> u(0.1, 5.0);
  std::uniform_int_distribution<int> level(1, 6);
  std::normal_distribution<double> z(0.0, 0.7);
  std::bernoulli_distribution ev(0.65);
  Batch b;
  for (std::size_t i = 0; i < n; ++i) {
    b.targets.push_back({ties ? 0.5 * level(rng) : u(rng), ev(rng) ? 1 : 0});
    b.weights.push_back(0.5 + u(rng) / 5.0);
    b.pred.push_back(z(rng));
  }
  b.targets[0].event = 1;
  return b;
}

void check_derivatives(const std::function<LossEval(const std::vector<double>&)>& f, const std::vector<double>& x,
                       double tol = 1e-5) {
  const LossEval at = f(x);
  const auto fd = oracle::central_difference([&](const std::vector<double>& p) { return f(p).loss; }, x);
  for (std::size_t k = 0; k < x.size(); ++k) CHECK(oracle::relative_error(at.gradients[k], fd[k]) < tol);
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (at.hessians[k] <= kHessianFloor) continue;
    auto grad_k = [&](const std::vector<double>& p) { return f(p).gradients[k]; };
    std::vector<double> xp = x, xm = x;
    xp[k] += 1e-5;
    xm[k] -= 1e-5;
    const double h_fd = (grad_k(xp) - grad_k(xm)) / 2e-5;
    CHECK(oracle::relative_error(at.hessians[k], h_fd) < tol);
  }
}

}  // namespace

TEST_SUITE("losses") {
  TEST_CASE("Cox two-subject example") {
    const std::vector<SurvivalTarget> t{{1, 1}, {2, 1}};
    const auto e = cox_loss(t, std::vector<double>{0, 0});
    CHECK(e.loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(e.gradients[0] == doctest::Approx(-0.5));
    CHECK(e.gradients[1] == doctest::Approx(0.5));
    CHECK_THROWS_AS(cox_loss(std::vector<SurvivalTarget>{{1, 0}}, std::vector<double>{0}), FitError);
  }

  TEST_CASE("Cox derivatives match finite differences with ties and weights") {
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 20; ++rep) {
      const Batch b = random_batch(rng, 30, rep % 2 == 0);
      check_derivatives([&](const std::vector<double>& p) { return cox_loss(b.targets, p, b.weights); }, b.pred);
    }
  }

  TEST_CASE("Cox gradient sums to zero and the loss is shift invariant") {
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 10; ++rep) {
      const Batch b = random_batch(rng, 40, rep % 2 == 1);
      const auto e = cox_loss(b.targets, b.pred);
      double s = 0.0;
      for (double g : e.gradients) s += g;
      CHECK(std::abs(s) < 1e-12);
      std::vector<double> shifted = b.pred;
      for (double& v : shifted) v += 3.25;
      CHECK(std::abs(cox_loss(b.targets, shifted).loss - e.loss) < 1e-9);
    }
  }

  TEST_CASE("AFT normal at the symmetric point") {
    const std::vector<SurvivalTarget> t{{1.0, 1}};
    const auto e = aft_loss(t, std::vector<double>{0.0}, {}, AftLossConfig{});
    CHECK(e.loss == doctest::Approx(0.5 * std::log(2.0 * M_PI)).epsilon(1e-14));
    CHECK(std::abs(e.gradients[0]) < 1e-15);
  }

  TEST_CASE("AFT censored loss vanishes as u grows and decreases in u") {
    const std::vector<SurvivalTarget> t{{2.0, 0}};
    for (auto dist : {AftDistribution::Normal, AftDistribution::Logistic}) {
      const AftLossConfig cfg{dist, 1.0};
      double prev = 1e9;
      for (double u = -3.0; u <= 8.0; u += 0.5) {
        const double l = aft_loss(t, std::vector<double>{u}, {}, cfg).loss;
        CHECK(l < prev);
        prev = l;
      }
      CHECK(aft_loss(t, std::vector<double>{60.0}, {}, cfg).loss < 1e-12);
    }
  }

  TEST_CASE("AFT derivatives match finite differences") {
    std::mt19937_64 rng(3);
    for (auto dist : {AftDistribution::Normal, AftDistribution::Logistic}) {
      for (int rep = 0; rep < 10; ++rep) {
        const Batch b = random_batch(rng, 25, false);
        const AftLossConfig cfg{dist, 0.5 + 0.1 * rep};
        check_derivatives([&](const std::vector<double>& p) { return aft_loss(b.targets, p, b.weights, cfg); }, b.pred);
      }
    }
  }

  TEST_CASE("AFT rejects an event at time zero") {
    const std::vector<SurvivalTarget> t{{0.0, 1}};
    CHECK_THROWS_AS(aft_loss(t, std::vector<double>{0.0}, {}, AftLossConfig{}), DataError);
    const std::vector<SurvivalTarget> c{{0.0, 0}};
    CHECK(aft_loss(c, std::vector<double>{0.0}, {}, AftLossConfig{}).loss == 0.0);
  }

  TEST_CASE("squared loss examples") {
    const std::vector<double> t{1, 3};
    const auto e = squared_loss(t, std::vector<double>{0, 0}, std::vector<double>{2, 1});
    CHECK(e.loss == 5.5);
    const auto perfect = squared_loss(t, t);
    CHECK(perfect.loss == 0.0);
    CHECK(perfect.gradients == std::vector<double>{0.0, 0.0});
    const auto zero_w = squared_loss(t, std::vector<double>{0, 0}, std::vector<double>{0, 1});
    CHECK(zero_w.gradients[0] == 0.0);
  }

  TEST_CASE("logistic loss examples") {
    const auto e = logistic_loss(std::vector<int>{1, 0}, std::vector<double>{0, 0}, std::vector<double>{2, 2});
    CHECK(e.gradients[0] == -1.0);
    CHECK(e.gradients[1] == 1.0);
    CHECK(logistic_loss(std::vector<int>{1}, std::vector<double>{50.0}).loss < 1e-20);
  }

  TEST_CASE("squared and logistic derivatives match finite differences") {
    std::mt19937_64 rng(4);
    for (int rep = 0; rep < 10; ++rep) {
      const Batch b = random_batch(rng, 20, false);
      std::vector<double> times;
      std::vector<int> labels;
      for (const auto& t : b.targets) {
        times.push_back(t.time);
        labels.push_back(t.event);
      }
      check_derivatives([&](const std::vector<double>& p) { return squared_loss(times, p, b.weights); }, b.pred);
      check_derivatives([&](const std::vector<double>& p) { return logistic_loss(labels, p, b.weights); }, b.pred,
                        1e-6);
    }
  }

  TEST_CASE("doubling weights doubles derivatives") {
    std::mt19937_64 rng(5);
    const Batch b = random_batch(rng, 30, true);
    std::vector<double> w2 = b.weights;
    for (double& w : w2) w *= 2.0;
    std::vector<double> times;
    std::vector<int> labels;
    for (const auto& t : b.targets) {
      times.push_back(t.time);
      labels.push_back(t.event);
    }
    const std::vector<std::pair<LossEval, LossEval>> pairs{
        {cox_loss(b.targets, b.pred, b.weights), cox_loss(b.targets, b.pred, w2)},
        {aft_loss(b.targets, b.pred, b.weights, {}), aft_loss(b.targets, b.pred, w2, {})},
        {squared_loss(times, b.pred, b.weights), squared_loss(times, b.pred, w2)},
        {logistic_loss(labels, b.pred, b.weights), logistic_loss(labels, b.pred, w2)}};
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto& [one, two] = pairs[k];
      for (std::size_t i = 0; i < one.gradients.size(); ++i) {
        CHECK(two.gradients[i] == doctest::Approx(2.0 * one.gradients[i]).epsilon(1e-12));
        CHECK(two.hessians[i] == doctest::Approx(2.0 * one.hessians[i]).epsilon(1e-12));
      }
      if (k > 0) CHECK(two.loss == doctest::Approx(2.0 * one.loss).epsilon(1e-12));
    }
  }

  TEST_CASE("intercepts") {
    const std::vector<SurvivalTarget> t{{1, 1}, {3, 1}};
    CHECK(loss_intercept(LossId::Squared, t) == 2.0);
    CHECK(loss_intercept(LossId::Cox, t) == 0.0);
    CHECK(loss_intercept(LossId::Logistic, t) == doctest::Approx(std::log((1 - 1e-6) / 1e-6)));
    CHECK(loss_intercept(LossId::AftNormal, t) == doctest::Approx(0.5 * std::log(3.0)));
    CHECK_THROWS(loss_intercept(LossId::Squared, std::vector<SurvivalTarget>{}));
  }

  TEST_CASE("hessians respect the floor") {
    const std::vector<SurvivalTarget> t{{1.0, 0}, {2.0, 0}, {3.0, 1}};
    const auto e = aft_loss(t, std::vector<double>{40.0, 40.0, 0.0}, {}, {});
    for (double h : e.hessians) CHECK(h >= kHessianFloor);
  }
}
