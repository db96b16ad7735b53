#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "dcfit/errors.hpp"
#include "dcfit/learners.hpp"

namespace dcfit {

namespace {

// Trees are grown over count-weighted rows: the bootstrap resample is a
// multiplicity vector over the original rows, and per-feature orderings are
// computed once per forest, so node scans never sort.
struct TreeBuilder {
  const Eigen::MatrixXd& X;
  const Eigen::VectorXd& y;
  int min_leaf;
  int mtry;
  Rng& rng;

  int n = 0;
  int p = 0;
  std::vector<std::vector<int>> order;   // per feature: rows sorted by value
  std::vector<int> weight;               // bootstrap multiplicity per row
  // Node segments: seg[f][lo..hi) lists the node's rows in feature-f order.
  std::vector<std::vector<int>> seg;
  std::vector<int> scratch;
  std::vector<std::uint8_t> goes_left;
  std::vector<int> feat_pool;
  Tree tree;

  void init() {
    n = static_cast<int>(X.rows());
    p = static_cast<int>(X.cols());
    order.resize(static_cast<std::size_t>(p));
    for (int f = 0; f < p; ++f) {
      auto& ord = order[static_cast<std::size_t>(f)];
      ord.resize(static_cast<std::size_t>(n));
      std::iota(ord.begin(), ord.end(), 0);
      std::stable_sort(ord.begin(), ord.end(), [&](int a, int b) {
        return X(a, f) < X(b, f);
      });
    }
    weight.resize(static_cast<std::size_t>(n));
    seg.assign(static_cast<std::size_t>(p), {});
    scratch.resize(static_cast<std::size_t>(n));
    goes_left.assign(static_cast<std::size_t>(n), 0);
    feat_pool.resize(static_cast<std::size_t>(p));
  }

  Tree build() {
    // Bootstrap multiplicities.
    std::fill(weight.begin(), weight.end(), 0);
    for (int i = 0; i < n; ++i) {
      weight[rng.below(static_cast<std::uint64_t>(n))]++;
    }
    int m = 0;
    for (int f = 0; f < p; ++f) {
      auto& s = seg[static_cast<std::size_t>(f)];
      s.clear();
      for (int row : order[static_cast<std::size_t>(f)]) {
        if (weight[static_cast<std::size_t>(row)] > 0) s.push_back(row);
      }
      m = static_cast<int>(s.size());
    }
    tree.nodes.clear();
    grow(0, m);
    return std::move(tree);
  }

  int make_leaf(int lo, int hi, double wsum1, int wtotal) {
    TreeNode node;
    node.count = wtotal;
    node.prob = wsum1 / static_cast<double>(wtotal);
    tree.nodes.push_back(node);
    return static_cast<int>(tree.nodes.size()) - 1;
  }

  // Grows the subtree over segment [lo, hi); returns the node index.
  int grow(int lo, int hi) {
    const auto& rows0 = seg[0];
    int wtotal = 0;
    double wsum1 = 0.0;
    for (int i = lo; i < hi; ++i) {
      const int row = rows0[static_cast<std::size_t>(i)];
      const int w = weight[static_cast<std::size_t>(row)];
      wtotal += w;
      wsum1 += w * y[row];
    }
    const bool pure = wsum1 == 0.0 || wsum1 == static_cast<double>(wtotal);
    if (pure || wtotal < 2 * min_leaf) return make_leaf(lo, hi, wsum1, wtotal);

    for (int k = 0; k < mtry; ++k) {
      const int j =
          k + static_cast<int>(rng.below(static_cast<std::uint64_t>(p - k)));
      std::swap(feat_pool[static_cast<std::size_t>(k)],
                feat_pool[static_cast<std::size_t>(j)]);
    }

    int best_feat = -1;
    double best_thr = 0.0;
    double best_impurity = std::numeric_limits<double>::infinity();
    for (int k = 0; k < mtry; ++k) {
      const int f = feat_pool[static_cast<std::size_t>(k)];
      const auto& rows = seg[static_cast<std::size_t>(f)];
      int wl = 0;
      double wl1 = 0.0;
      for (int i = lo; i + 1 < hi; ++i) {
        const int row = rows[static_cast<std::size_t>(i)];
        const int w = weight[static_cast<std::size_t>(row)];
        wl += w;
        wl1 += w * y[row];
        const double v = X(row, f);
        const double vnext = X(rows[static_cast<std::size_t>(i + 1)], f);
        if (v == vnext) continue;
        const int wr = wtotal - wl;
        if (wl < min_leaf || wr < min_leaf) continue;
        const double pl = wl1 / wl;
        const double pr = (wsum1 - wl1) / wr;
        const double impurity =
            2.0 * (wl * pl * (1.0 - pl) + wr * pr * (1.0 - pr));
        if (impurity < best_impurity) {
          best_impurity = impurity;
          best_feat = f;
          best_thr = 0.5 * (v + vnext);
        }
      }
    }
    if (best_feat < 0) return make_leaf(lo, hi, wsum1, wtotal);

    // Stable partition of every feature segment by the split predicate.
    int wl_check = 0;
    for (int i = lo; i < hi; ++i) {
      const int row = seg[0][static_cast<std::size_t>(i)];
      const bool left = X(row, best_feat) <= best_thr;
      goes_left[static_cast<std::size_t>(row)] = left ? 1 : 0;
      if (left) wl_check += weight[static_cast<std::size_t>(row)];
    }
    if (wl_check < min_leaf || wtotal - wl_check < min_leaf) {
      return make_leaf(lo, hi, wsum1, wtotal);  // degenerate midpoint tie
    }
    int mid = 0;
    for (int f = 0; f < p; ++f) {
      auto& s = seg[static_cast<std::size_t>(f)];
      int put_left = lo;
      int put_right = 0;
      for (int i = lo; i < hi; ++i) {
        const int row = s[static_cast<std::size_t>(i)];
        if (goes_left[static_cast<std::size_t>(row)]) {
          s[static_cast<std::size_t>(put_left++)] = row;
        } else {
          scratch[static_cast<std::size_t>(put_right++)] = row;
        }
      }
      for (int i = 0; i < put_right; ++i) {
        s[static_cast<std::size_t>(put_left + i)] =
            scratch[static_cast<std::size_t>(i)];
      }
      mid = put_left;
    }

    TreeNode node;
    node.feature = best_feat;
    node.threshold = best_thr;
    node.count = wtotal;
    tree.nodes.push_back(node);
    const int self = static_cast<int>(tree.nodes.size()) - 1;
    const int left = grow(lo, mid);
    const int right = grow(mid, hi);
    tree.nodes[self].left = left;
    tree.nodes[self].right = right;
    return self;
  }
};

double tree_predict(const Tree& tree, const Eigen::MatrixXd& X,
                    Eigen::Index row) {
  int node = 0;
  while (tree.nodes[node].feature >= 0) {
    const TreeNode& nd = tree.nodes[node];
    node = X(row, nd.feature) <= nd.threshold ? nd.left : nd.right;
  }
  return tree.nodes[node].prob;
}

}  // namespace

FittedLearner fit_random_forest(const FeatureMatrix& X,
                                const Eigen::VectorXd& y, int n_trees,
                                int min_leaf, Rng& rng) {
  const int n = static_cast<int>(X.values.rows());
  if (n_trees < 1) throw Error("fit_random_forest: n_trees must be >= 1");
  if (min_leaf < 1) throw Error("fit_random_forest: min_leaf must be >= 1");
  if (n < 2 * min_leaf) {
    throw FitError("fit_random_forest: need at least 2*min_leaf = " +
                   std::to_string(2 * min_leaf) + " rows, got " +
                   std::to_string(n));
  }
  if (y.size() != n) throw Error("fit_random_forest: response length mismatch");
  for (int i = 0; i < n; ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) {
      throw Error("fit_random_forest: response must be binary 0/1");
    }
  }

  const int p = static_cast<int>(X.values.cols());
  const int mtry =
      static_cast<int>(std::ceil(std::sqrt(static_cast<double>(p))));

  ForestModel model;
  model.min_leaf = min_leaf;
  model.trees.reserve(static_cast<std::size_t>(n_trees));

  TreeBuilder builder{X.values, y, min_leaf, mtry, rng};
  builder.init();
  for (int t = 0; t < n_trees; ++t) {
    std::iota(builder.feat_pool.begin(), builder.feat_pool.end(), 0);
    model.trees.push_back(builder.build());
  }

  FittedLearner out;
  out.kind = "forest";
  out.schema = X.names;
  out.model = std::move(model);
  return out;
}

namespace detail {

Eigen::VectorXd predict_forest(const ForestModel& m, const FeatureMatrix& X) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(X.values.rows());
  for (const Tree& tree : m.trees) {
    for (Eigen::Index i = 0; i < X.values.rows(); ++i) {
      out[i] += tree_predict(tree, X.values, i);
    }
  }
  return out / static_cast<double>(m.trees.size());
}

}  // namespace detail

}  // namespace dcfit
