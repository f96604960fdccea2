#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "survml/data.hpp"

namespace survml {

inline constexpr double kHessianFloor = 1e-16;

/// Total loss plus per-sample first and second derivatives with respect to
/// the prediction.
struct LossEval {
  double loss = 0.0;
  std::vector<double> gradients;
  std::vector<double> hessians;
};

enum class LossId { Cox, AftNormal, AftLogistic, Squared, Logistic };

std::string loss_name(LossId id);
LossId loss_from_name(const std::string& name);

/// Loss bound to its labels and weights, as consumed by the boosting loop.
class Loss {
 public:
  virtual ~Loss() = default;
  virtual LossEval evaluate(std::span<const double> predictions) const = 0;
  virtual double intercept() const = 0;
  virtual LossId id() const = 0;
  /// Disables second-order statistics (hessians reported as 1).
  virtual bool first_order() const { return false; }
};

enum class AftDistribution { Normal, Logistic };

struct AftLossConfig {
  AftDistribution distribution = AftDistribution::Normal;
  double sigma = 1.0;
};

// Empty weight spans mean unit weights throughout.

/// Negative log partial likelihood, Breslow ties, O(n log n).
LossEval cox_loss(std::span<const SurvivalTarget> targets, std::span<const double> eta,
                  std::span<const double> weights = {});

/// Right-censored AFT negative log likelihood with z = (ln t - u) / sigma.
LossEval aft_loss(std::span<const SurvivalTarget> targets, std::span<const double> u,
                  std::span<const double> weights, const AftLossConfig& config);

/// 0.5 * sum w (t - yhat)^2.
LossEval squared_loss(std::span<const double> times, std::span<const double> predictions,
                      std::span<const double> weights = {});

/// Weighted log-loss on the logit scale.
LossEval logistic_loss(std::span<const int> labels, std::span<const double> predictions,
                       std::span<const double> weights = {});

/// Constant starting prediction for the loss. For the logistic loss the
/// event indicator of each target is its label.
double loss_intercept(LossId id, std::span<const SurvivalTarget> targets,
                      std::span<const double> weights = {});

std::unique_ptr<Loss> make_cox_loss(std::vector<SurvivalTarget> targets, std::vector<double> weights,
                                    bool first_order = false);
std::unique_ptr<Loss> make_aft_loss(std::vector<SurvivalTarget> targets, std::vector<double> weights,
                                    AftLossConfig config);
std::unique_ptr<Loss> make_squared_loss(std::vector<double> times, std::vector<double> weights);
std::unique_ptr<Loss> make_logistic_loss(std::vector<int> labels, std::vector<double> weights);

}  // namespace survml
