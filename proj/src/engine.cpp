#include "survml/engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace survml {

std::size_t Tree::leaf_index(std::span<const double> x) const {
  if (nodes.empty()) throw DataError("tree has no nodes");
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return i;
}

std::size_t Tree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::size_t Tree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

double split_gain(double gl, double hl, double gr, double hr, double lambda) {
  const double g = gl + gr, h = hl + hr;
  return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda));
}

namespace {

constexpr std::size_t kParallelWork = 1 << 16;

struct Candidate {
  bool valid = false;
  double score = 0.0;
  double threshold = 0.0;
};

// Midpoint that still routes `lo` left and `hi` right.
double midpoint(double lo, double hi) {
  const double m = lo + 0.5 * (hi - lo);
  return (m >= hi) ? lo : m;
}

std::vector<std::size_t> all_rows(std::size_t n, std::span<const std::size_t> rows) {
  if (!rows.empty()) return {rows.begin(), rows.end()};
  return iota_indices(n);
}

std::vector<std::size_t> sorted_by_feature(const Matrix& x, const std::vector<std::size_t>& rows,
                                           std::size_t f) {
  std::vector<std::size_t> order = rows;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x(a, f) < x(b, f); });
  return order;
}

// Best split per feature, merged in feature order so that ties keep the
// lower feature index and, within a feature, the lower threshold.
Candidate merge_candidates(const std::vector<Candidate>& per_feature, std::size_t& feature) {
  Candidate best;
  for (std::size_t f = 0; f < per_feature.size(); ++f) {
    const auto& c = per_feature[f];
    if (c.valid && (!best.valid || c.score > best.score)) {
      best = c;
      feature = f;
    }
  }
  return best;
}

class RegressionBuilder {
 public:
  RegressionBuilder(const Matrix& x, std::span<const double> g, std::span<const double> h,
                    const RegressionTreeParams& p)
      : x_(x), g_(g), h_(h), p_(p) {}

  int build(const std::vector<std::size_t>& rows, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    double gsum = 0.0, hsum = 0.0;
    for (std::size_t r : rows) {
      gsum += g_[r];
      hsum += h_[r];
    }
    {
      auto& node = tree_.nodes.back();
      node.sum_grad = gsum;
      node.sum_hess = hsum;
      node.count = rows.size();
      node.value = -gsum / (hsum + p_.reg_lambda);
    }
    if (depth >= p_.max_depth || rows.size() < 2 * std::max<std::size_t>(p_.min_samples_leaf, 1)) {
      return id;
    }
    const std::size_t d = x_.cols();
    std::vector<Candidate> per_feature(d);
    auto scan = [&](std::size_t f) { per_feature[f] = scan_feature(rows, f, gsum, hsum); };
    if (rows.size() * d >= kParallelWork && d > 1) {
      parallel_for(d, scan);
    } else {
      for (std::size_t f = 0; f < d; ++f) scan(f);
    }
    std::size_t feature = 0;
    const Candidate best = merge_candidates(per_feature, feature);
    if (!best.valid) return id;

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) (x_(r, feature) <= best.threshold ? left : right).push_back(r);
    const int l = build(left, depth + 1);
    const int r = build(right, depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = static_cast<int>(feature);
    node.threshold = best.threshold;
    node.gain = best.score;
    node.left = l;
    node.right = r;
    node.value = 0.0;
    return id;
  }

  Tree take() { return std::move(tree_); }

 private:
  Candidate scan_feature(const std::vector<std::size_t>& rows, std::size_t f, double gsum,
                         double hsum) const {
    const std::vector<std::size_t> order = sorted_by_feature(x_, rows, f);
    const double lambda = p_.reg_lambda;
    const double parent = gsum * gsum / (hsum + lambda);
    const std::size_t msl = std::max<std::size_t>(p_.min_samples_leaf, 1);
    Candidate best;
    double gl = 0.0, hl = 0.0;
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
      gl += g_[order[k]];
      hl += h_[order[k]];
      const double xv = x_(order[k], f), xn = x_(order[k + 1], f);
      if (!(xv < xn)) continue;
      const std::size_t nl = k + 1, nr = order.size() - nl;
      if (nl < msl || nr < msl) continue;
      const double gr = gsum - gl, hr = hsum - hl;
      if (hl < p_.min_child_weight || hr < p_.min_child_weight) continue;
      const double sl = gl * gl / (hl + lambda), sr = gr * gr / (hr + lambda);
      const double gain = 0.5 * (sl + sr - parent);
      const double floor = 1e-12 * (std::abs(sl) + std::abs(sr) + std::abs(parent));
      if (!(gain > p_.min_split_gain) || !(gain > floor)) continue;
      if (!best.valid || gain > best.score) best = {true, gain, midpoint(xv, xn)};
    }
    return best;
  }

  const Matrix& x_;
  std::span<const double> g_;
  std::span<const double> h_;
  const RegressionTreeParams& p_;
  Tree tree_;
};

// Fenwick tree of doubles over positions [0, n).
class SumTree {
 public:
  explicit SumTree(std::size_t n) : t_(n + 1, 0.0) {}
  void add(std::size_t pos, double v) {
    for (std::size_t i = pos + 1; i < t_.size(); i += i & (~i + 1)) t_[i] += v;
  }
  // Sum over positions < pos.
  double below(std::size_t pos) const {
    double s = 0.0;
    for (std::size_t i = pos; i > 0; i -= i & (~i + 1)) s += t_[i];
    return s;
  }

 private:
  std::vector<double> t_;
};

class SurvivalBuilder {
 public:
  SurvivalBuilder(const Matrix& x, std::span<const SurvivalTarget> t, const SurvivalTreeParams& p)
      : x_(x), t_(t), p_(p), rng_(p.seed) {
    const std::size_t d = x.cols();
    mtry_ = p.mtry == 0 ? static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))))
                        : std::min(p.mtry, d);
    mtry_ = std::max<std::size_t>(mtry_, 1);
  }

  int build(const std::vector<std::size_t>& rows, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    tree_.nodes.back().count = rows.size();

    bool has_event = false;
    for (std::size_t r : rows) has_event = has_event || t_[r].event;
    const std::size_t msl = std::max<std::size_t>(p_.min_samples_leaf, 1);
    if (!has_event || depth >= p_.max_depth || rows.size() < 2 * msl) {
      make_leaf(id, rows);
      return id;
    }
    std::vector<std::size_t> features = iota_indices(x_.cols());
    shuffle_indices(features, rng_);
    features.resize(mtry_);
    std::sort(features.begin(), features.end());

    const NodeStats stats = node_stats(rows);
    std::vector<Candidate> per_feature(x_.cols());
    auto scan = [&](std::size_t k) {
      per_feature[features[k]] = scan_feature(rows, features[k], stats);
    };
    if (rows.size() * features.size() >= kParallelWork && features.size() > 1) {
      parallel_for(features.size(), scan);
    } else {
      for (std::size_t k = 0; k < features.size(); ++k) scan(k);
    }
    std::size_t feature = 0;
    const Candidate best = merge_candidates(per_feature, feature);
    if (!best.valid) {
      make_leaf(id, rows);
      return id;
    }
    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) (x_(r, feature) <= best.threshold ? left : right).push_back(r);
    const int l = build(left, depth + 1);
    const int r = build(right, depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = static_cast<int>(feature);
    node.threshold = best.threshold;
    node.gain = best.score;
    node.left = l;
    node.right = r;
    return id;
  }

  Tree take() { return std::move(tree_); }

 private:
  // Per distinct event time (ascending) in the node: cumulative sums of
  // d/n, c = d(n-d)/(n^2(n-1)) and c*n, all with a leading zero.
  struct NodeStats {
    std::vector<double> event_times;
    std::vector<double> hazard;
    std::vector<double> c_cum;
    std::vector<double> cn_cum;
  };

  NodeStats node_stats(const std::vector<std::size_t>& rows) const {
    NodeStats s;
    s.hazard.push_back(0.0);
    s.c_cum.push_back(0.0);
    s.cn_cum.push_back(0.0);
    std::vector<std::pair<double, int>> obs;
    for (std::size_t r : rows) obs.emplace_back(t_[r].time, t_[r].event);
    std::sort(obs.begin(), obs.end());
    const double total = static_cast<double>(obs.size());
    for (std::size_t k = 0; k < obs.size();) {
      std::size_t j = k;
      double deaths = 0;
      while (j < obs.size() && obs[j].first == obs[k].first) deaths += obs[j++].second;
      if (deaths > 0) {
        const double n = total - static_cast<double>(k);
        const double c = n > 1.0 ? deaths * (n - deaths) / (n * n * (n - 1.0)) : 0.0;
        s.event_times.push_back(obs[k].first);
        s.hazard.push_back(s.hazard.back() + deaths / n);
        s.c_cum.push_back(s.c_cum.back() + c);
        s.cn_cum.push_back(s.cn_cum.back() + c * n);
      }
      k = j;
    }
    return s;
  }

  Candidate scan_feature(const std::vector<std::size_t>& rows, std::size_t f,
                         const NodeStats& s) const {
    const std::vector<std::size_t> order = sorted_by_feature(x_, rows, f);
    const std::size_t k_times = s.event_times.size();
    const std::size_t msl = std::max<std::size_t>(p_.min_samples_leaf, 1);
    // Left-group subjects indexed by the number of event times <= their time.
    SumTree count_below(k_times + 1), ccum_below(k_times + 1);
    double u = 0.0, v = 0.0, n_left = 0.0;
    Candidate best;
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
      const std::size_t r = order[k];
      const auto idx = static_cast<std::size_t>(
          std::upper_bound(s.event_times.begin(), s.event_times.end(), t_[r].time) -
          s.event_times.begin());
      const double cnt_ge = n_left - count_below.below(idx);
      const double left_sum = cnt_ge * s.c_cum[idx] + ccum_below.below(idx);
      u += t_[r].event - s.hazard[idx];
      v += s.cn_cum[idx] - 2.0 * left_sum - s.c_cum[idx];
      count_below.add(idx, 1.0);
      ccum_below.add(idx, s.c_cum[idx]);
      n_left += 1.0;

      const double xv = x_(r, f), xn = x_(order[k + 1], f);
      if (!(xv < xn)) continue;
      const std::size_t nl = k + 1, nr = order.size() - nl;
      if (nl < msl || nr < msl) continue;
      if (!(v > 1e-12)) continue;
      const double z = std::abs(u) / std::sqrt(v);
      if (!best.valid || z > best.score) best = {true, z, midpoint(xv, xn)};
    }
    return best;
  }

  void make_leaf(int id, const std::vector<std::size_t>& rows) {
    tree_.nodes[static_cast<std::size_t>(id)].members = rows;
  }

  const Matrix& x_;
  std::span<const SurvivalTarget> t_;
  const SurvivalTreeParams& p_;
  Rng rng_;
  std::size_t mtry_ = 1;
  Tree tree_;
};

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw DataError(std::string(what) + " must be finite");
  }
}

}  // namespace

Tree fit_regression_tree(const Matrix& features, std::span<const double> gradients,
                         std::span<const double> hessians, const RegressionTreeParams& params,
                         std::span<const std::size_t> rows) {
  const std::size_t n = features.rows();
  if (gradients.size() != n || hessians.size() != n) {
    throw DataError("fit_regression_tree: statistics length does not match rows");
  }
  check_finite(gradients, "gradients");
  check_finite(hessians, "hessians");
  check_finite(features.data(), "features");
  if (params.reg_lambda < 0.0) throw ConfigError("reg_lambda must be >= 0");
  const auto idx = all_rows(n, rows);
  if (idx.empty()) throw DataError("fit_regression_tree: no rows");
  RegressionBuilder b(features, gradients, hessians, params);
  b.build(idx, 0);
  return b.take();
}

Tree fit_survival_tree(const Matrix& features, std::span<const SurvivalTarget> targets,
                       const SurvivalTreeParams& params, std::span<const std::size_t> rows) {
  if (targets.size() != features.rows()) throw DataError("fit_survival_tree: length mismatch");
  validate_targets(targets);
  check_finite(features.data(), "features");
  if (features.cols() == 0) throw DataError("fit_survival_tree: no features");
  const auto idx = all_rows(features.rows(), rows);
  bool any_event = false;
  for (std::size_t r : idx) any_event = any_event || targets[r].event;
  if (!any_event) throw FitError("fit_survival_tree: no events");
  SurvivalBuilder b(features, targets, params);
  b.build(idx, 0);
  return b.take();
}

BoostedEnsemble boost(const Matrix& features, const Loss& loss, const BoostParams& params) {
  if (!(params.learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
  if (!(params.subsample > 0.0 && params.subsample <= 1.0)) {
    throw ConfigError("subsample must be in (0, 1]");
  }
  check_finite(features.data(), "features");
  const std::size_t n = features.rows();
  BoostedEnsemble model;
  model.base_score = loss.intercept();
  model.learning_rate = params.learning_rate;
  model.loss = loss.id();
  model.n_features = features.cols();

  RegressionTreeParams tree_params = params.tree;
  if (loss.first_order()) tree_params.reg_lambda = 0.0;
  std::vector<double> preds(n, model.base_score);
  auto evaluate = [&](std::size_t round) {
    LossEval e = loss.evaluate(preds);
    bool finite = std::isfinite(e.loss);
    for (std::size_t i = 0; finite && i < n; ++i) {
      finite = std::isfinite(e.gradients[i]) && std::isfinite(e.hessians[i]);
    }
    if (!finite) {
      throw FitError("boosting round " + std::to_string(round) + ": loss produced non-finite values");
    }
    return e;
  };
  LossEval current = evaluate(0);
  model.loss_trace.push_back(current.loss);

  Rng rng(params.seed);
  const auto m = static_cast<std::size_t>(
      std::max<long long>(1, std::llround(params.subsample * static_cast<double>(n))));
  for (std::size_t round = 1; round <= params.n_rounds; ++round) {
    if (loss.first_order()) std::fill(current.hessians.begin(), current.hessians.end(), 1.0);
    std::vector<std::size_t> rows;
    if (m < n) {
      rows = iota_indices(n);
      shuffle_indices(rows, rng);
      rows.resize(m);
      std::sort(rows.begin(), rows.end());
    }
    Tree tree = fit_regression_tree(features, current.gradients, current.hessians, tree_params, rows);
    for (std::size_t i = 0; i < n; ++i) preds[i] += params.learning_rate * tree.predict(features.row(i));
    model.trees.push_back(std::move(tree));
    current = evaluate(round);
    model.loss_trace.push_back(current.loss);
  }
  return model;
}

std::vector<double> predict_ensemble(const BoostedEnsemble& model, const Matrix& features) {
  if (features.cols() != model.n_features) {
    throw DataError("predict: expected " + std::to_string(model.n_features) + " features, got " +
                    std::to_string(features.cols()));
  }
  std::vector<double> out(features.rows(), model.base_score);
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const auto x = features.row(i);
    double s = 0.0;
    for (const auto& t : model.trees) s += t.predict(x);
    out[i] += model.learning_rate * s;
  }
  return out;
}

}  // namespace survml
