#include "survml/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace survml {

std::string loss_name(LossId id) {
  switch (id) {
    case LossId::Cox: return "cox";
    case LossId::AftNormal: return "aft_normal";
    case LossId::AftLogistic: return "aft_logistic";
    case LossId::Squared: return "squared";
    case LossId::Logistic: return "logistic";
  }
  return "unknown";
}

LossId loss_from_name(const std::string& name) {
  for (LossId id : {LossId::Cox, LossId::AftNormal, LossId::AftLogistic, LossId::Squared,
                    LossId::Logistic}) {
    if (loss_name(id) == name) return id;
  }
  throw DataError("unknown loss '" + name + "'");
}

namespace {

double weight_at(std::span<const double> w, std::size_t i) { return w.empty() ? 1.0 : w[i]; }

void check_weights(std::span<const double> w, std::size_t n) {
  if (!w.empty() && w.size() != n) throw DataError("loss: weight length mismatch");
  for (double v : w) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DataError("loss: weights must be finite and >= 0");
  }
}

void check_predictions(std::span<const double> p, std::size_t n) {
  if (p.size() != n) throw DataError("loss: prediction length mismatch");
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void floor_hessians(std::vector<double>& h) {
  for (double& v : h) v = std::max(v, kHessianFloor);
}

// log of the standard normal upper tail and the inverse Mills ratio
// phi(z) / Q(z), with an asymptotic branch where erfc underflows.
struct NormalTail {
  double log_q;
  double hazard;
};

NormalTail normal_tail(double z) {
  constexpr double kLogSqrt2Pi = 0.91893853320467274178;
  if (z > 30.0) {
    const double z2 = z * z;
    const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2);
    return {-0.5 * z2 - std::log(z) - kLogSqrt2Pi + std::log(series), z / series};
  }
  const double q = 0.5 * std::erfc(z / std::numbers::sqrt2);
  const double log_phi = -0.5 * z * z - kLogSqrt2Pi;
  return {std::log(q), std::exp(log_phi - std::log(q))};
}

}  // namespace

LossEval cox_loss(std::span<const SurvivalTarget> targets, std::span<const double> eta,
                  std::span<const double> weights) {
  const std::size_t n = targets.size();
  check_predictions(eta, n);
  check_weights(weights, n);
  validate_targets(targets);
  bool any_event = false;
  for (const auto& t : targets) any_event = any_event || t.event;
  if (!any_event) throw FitError("cox loss: no events");

  double shift = -std::numeric_limits<double>::infinity();
  for (double e : eta) {
    if (!std::isfinite(e)) throw FitError("cox loss: non-finite prediction");
    shift = std::max(shift, e);
  }
  std::vector<std::size_t> order = iota_indices(n);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return targets[a].time < targets[b].time; });

  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = weight_at(weights, i) * std::exp(eta[i] - shift);

  // Risk-set sums per distinct time (suffix sums over ascending order).
  std::vector<std::size_t> group_start;
  for (std::size_t k = 0; k < n; ++k) {
    if (k == 0 || targets[order[k]].time != targets[order[k - 1]].time) group_start.push_back(k);
  }
  const std::size_t groups = group_start.size();
  std::vector<double> risk_sum(groups);
  double suffix = 0.0;
  for (std::size_t g = groups; g-- > 0;) {
    const std::size_t end = g + 1 < groups ? group_start[g + 1] : n;
    for (std::size_t k = group_start[g]; k < end; ++k) suffix += r[order[k]];
    risk_sum[g] = suffix;
  }

  LossEval out;
  out.gradients.assign(n, 0.0);
  out.hessians.assign(n, 0.0);
  double cum_a = 0.0, cum_b = 0.0;
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t end = g + 1 < groups ? group_start[g + 1] : n;
    double event_weight = 0.0;
    for (std::size_t k = group_start[g]; k < end; ++k) {
      const std::size_t i = order[k];
      if (!targets[i].event) continue;
      const double w = weight_at(weights, i);
      event_weight += w;
      out.loss -= w * (eta[i] - shift - std::log(risk_sum[g]));
    }
    if (event_weight > 0.0) {
      cum_a += event_weight / risk_sum[g];
      cum_b += event_weight / (risk_sum[g] * risk_sum[g]);
    }
    for (std::size_t k = group_start[g]; k < end; ++k) {
      const std::size_t i = order[k];
      out.gradients[i] = -targets[i].event * weight_at(weights, i) + r[i] * cum_a;
      out.hessians[i] = r[i] * cum_a - r[i] * r[i] * cum_b;
    }
  }
  floor_hessians(out.hessians);
  return out;
}

LossEval aft_loss(std::span<const SurvivalTarget> targets, std::span<const double> u,
                  std::span<const double> weights, const AftLossConfig& config) {
  const std::size_t n = targets.size();
  check_predictions(u, n);
  check_weights(weights, n);
  validate_targets(targets);
  if (!(config.sigma > 0.0)) throw DataError("aft loss: sigma must be > 0");
  const double sigma = config.sigma;
  const double log_sigma = std::log(sigma);
  constexpr double kLogSqrt2Pi = 0.91893853320467274178;

  LossEval out;
  out.gradients.assign(n, 0.0);
  out.hessians.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weight_at(weights, i);
    const auto& t = targets[i];
    if (t.time <= 0.0) {
      if (t.event) throw DataError("aft loss: event at time 0");
      continue;  // censored at 0: survival is 1, no information
    }
    const double log_t = std::log(t.time);
    const double z = (log_t - u[i]) / sigma;
    double loss, dz, d2z;  // derivatives of the loss with respect to z
    if (config.distribution == AftDistribution::Normal) {
      if (t.event) {
        loss = 0.5 * z * z + kLogSqrt2Pi + log_sigma + log_t;
        dz = z;
        d2z = 1.0;
      } else {
        const NormalTail tail = normal_tail(z);
        loss = -tail.log_q;
        dz = tail.hazard;
        d2z = tail.hazard * (tail.hazard - z);
      }
    } else {
      const double p = sigmoid(z);
      if (t.event) {
        loss = z + 2.0 * softplus(-z) + log_sigma + log_t;
        dz = 2.0 * p - 1.0;
        d2z = 2.0 * p * (1.0 - p);
      } else {
        loss = softplus(z);
        dz = p;
        d2z = p * (1.0 - p);
      }
    }
    out.loss += w * loss;
    out.gradients[i] = -w * dz / sigma;
    out.hessians[i] = w * d2z / (sigma * sigma);
  }
  floor_hessians(out.hessians);
  return out;
}

LossEval squared_loss(std::span<const double> times, std::span<const double> predictions,
                      std::span<const double> weights) {
  const std::size_t n = times.size();
  check_predictions(predictions, n);
  check_weights(weights, n);
  LossEval out;
  out.gradients.resize(n);
  out.hessians.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weight_at(weights, i);
    const double r = times[i] - predictions[i];
    out.loss += 0.5 * w * r * r;
    out.gradients[i] = -w * r;
    out.hessians[i] = w;
  }
  floor_hessians(out.hessians);
  return out;
}

LossEval logistic_loss(std::span<const int> labels, std::span<const double> predictions,
                       std::span<const double> weights) {
  const std::size_t n = labels.size();
  check_predictions(predictions, n);
  check_weights(weights, n);
  LossEval out;
  out.gradients.resize(n);
  out.hessians.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw DataError("logistic loss: labels must be 0/1");
    const double w = weight_at(weights, i);
    const double f = predictions[i];
    const double p = sigmoid(f);
    out.loss += w * (softplus(f) - labels[i] * f);
    out.gradients[i] = w * (p - labels[i]);
    out.hessians[i] = w * p * (1.0 - p);
  }
  floor_hessians(out.hessians);
  return out;
}

double loss_intercept(LossId id, std::span<const SurvivalTarget> targets,
                      std::span<const double> weights) {
  if (targets.empty()) throw DataError("loss_intercept: empty input");
  check_weights(weights, targets.size());
  double sw = 0.0, s = 0.0;
  switch (id) {
    case LossId::Cox: return 0.0;
    case LossId::Squared:
      for (std::size_t i = 0; i < targets.size(); ++i) {
        sw += weight_at(weights, i);
        s += weight_at(weights, i) * targets[i].time;
      }
      return sw > 0.0 ? s / sw : 0.0;
    case LossId::AftNormal:
    case LossId::AftLogistic:
      for (std::size_t i = 0; i < targets.size(); ++i) {
        if (targets[i].time <= 0.0) continue;
        sw += weight_at(weights, i);
        s += weight_at(weights, i) * std::log(targets[i].time);
      }
      return sw > 0.0 ? s / sw : 0.0;
    case LossId::Logistic: {
      for (std::size_t i = 0; i < targets.size(); ++i) {
        sw += weight_at(weights, i);
        s += weight_at(weights, i) * targets[i].event;
      }
      const double p = std::clamp(sw > 0.0 ? s / sw : 0.5, 1e-6, 1.0 - 1e-6);
      return std::log(p / (1.0 - p));
    }
  }
  return 0.0;
}

namespace {

class CoxLoss final : public Loss {
 public:
  CoxLoss(std::vector<SurvivalTarget> t, std::vector<double> w, bool first_order)
      : targets_(std::move(t)), weights_(std::move(w)), first_order_(first_order) {}
  LossEval evaluate(std::span<const double> p) const override {
    return cox_loss(targets_, p, weights_);
  }
  double intercept() const override { return loss_intercept(LossId::Cox, targets_, weights_); }
  LossId id() const override { return LossId::Cox; }
  bool first_order() const override { return first_order_; }

 private:
  std::vector<SurvivalTarget> targets_;
  std::vector<double> weights_;
  bool first_order_;
};

class AftLoss final : public Loss {
 public:
  AftLoss(std::vector<SurvivalTarget> t, std::vector<double> w, AftLossConfig c)
      : targets_(std::move(t)), weights_(std::move(w)), config_(c) {}
  LossEval evaluate(std::span<const double> p) const override {
    return aft_loss(targets_, p, weights_, config_);
  }
  double intercept() const override { return loss_intercept(id(), targets_, weights_); }
  LossId id() const override {
    return config_.distribution == AftDistribution::Normal ? LossId::AftNormal : LossId::AftLogistic;
  }

 private:
  std::vector<SurvivalTarget> targets_;
  std::vector<double> weights_;
  AftLossConfig config_;
};

class SquaredLoss final : public Loss {
 public:
  SquaredLoss(std::vector<double> t, std::vector<double> w) : times_(std::move(t)), weights_(std::move(w)) {}
  LossEval evaluate(std::span<const double> p) const override {
    return squared_loss(times_, p, weights_);
  }
  double intercept() const override {
    std::vector<SurvivalTarget> t;
    for (double v : times_) t.push_back({v, 0});
    return loss_intercept(LossId::Squared, t, weights_);
  }
  LossId id() const override { return LossId::Squared; }

 private:
  std::vector<double> times_;
  std::vector<double> weights_;
};

class LogisticLoss final : public Loss {
 public:
  LogisticLoss(std::vector<int> y, std::vector<double> w) : labels_(std::move(y)), weights_(std::move(w)) {}
  LossEval evaluate(std::span<const double> p) const override {
    return logistic_loss(labels_, p, weights_);
  }
  double intercept() const override {
    std::vector<SurvivalTarget> t;
    for (int v : labels_) t.push_back({0.0, v});
    return loss_intercept(LossId::Logistic, t, weights_);
  }
  LossId id() const override { return LossId::Logistic; }

 private:
  std::vector<int> labels_;
  std::vector<double> weights_;
};

}  // namespace

std::unique_ptr<Loss> make_cox_loss(std::vector<SurvivalTarget> targets, std::vector<double> weights,
                                    bool first_order) {
  return std::make_unique<CoxLoss>(std::move(targets), std::move(weights), first_order);
}

std::unique_ptr<Loss> make_aft_loss(std::vector<SurvivalTarget> targets, std::vector<double> weights,
                                    AftLossConfig config) {
  if (!(config.sigma > 0.0)) throw DataError("aft loss: sigma must be > 0");
  return std::make_unique<AftLoss>(std::move(targets), std::move(weights), config);
}

std::unique_ptr<Loss> make_squared_loss(std::vector<double> times, std::vector<double> weights) {
  return std::make_unique<SquaredLoss>(std::move(times), std::move(weights));
}

std::unique_ptr<Loss> make_logistic_loss(std::vector<int> labels, std::vector<double> weights) {
  return std::make_unique<LogisticLoss>(std::move(labels), std::move(weights));
}

}  // namespace survml
