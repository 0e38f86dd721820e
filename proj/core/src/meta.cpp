#include "tdse/meta.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tdse/csv.hpp"
#include "tdse/error.hpp"

namespace tdse::meta {

namespace {

void check_xy(const Rows& X, std::span<const int> y) {
  if (X.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "feature rows and labels differ in count");
  if (X.empty()) throw Error(ErrorCode::TooFewSamples, "no training rows");
  for (const auto& r : X) {
    if (r.size() != X[0].size()) throw Error(ErrorCode::ShapeMismatch, "feature rows differ in width");
  }
}

void require_both_classes(std::span<const int> y) {
  const auto up = std::count(y.begin(), y.end(), 1);
  if (up == 0 || up == static_cast<std::ptrdiff_t>(y.size())) {
    throw Error(ErrorCode::SingleClassTraining, "training labels contain a single class");
  }
}

// Sorting rows by value makes order-free objectives independent of the
// caller's row order down to the last bit.
std::vector<std::size_t> canonical_order(const Rows& X, std::span<const int> y) {
  std::vector<std::size_t> idx(X.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (X[a] != X[b]) return X[a] < X[b];
    return y[a] < y[b];
  });
  return idx;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

struct Dump {
  std::vector<nn::Tensor> tensors;
  std::vector<std::string> names;

  void add(std::string name, std::vector<double> values) {
    const std::size_t n = values.size();
    tensors.emplace_back(std::vector<std::size_t>{n}, std::move(values));
    names.push_back(std::move(name));
  }
  void add(std::string name, std::vector<std::size_t> shape, std::vector<double> values) {
    tensors.emplace_back(std::move(shape), std::move(values));
    names.push_back(std::move(name));
  }
  void write(std::ostream& out) {
    std::vector<nn::NamedTensor> nt;
    for (std::size_t i = 0; i < tensors.size(); ++i) nt.push_back({names[i], &tensors[i]});
    nn::save_checkpoint(out, nt);
  }
};

std::vector<double> flatten(const Rows& X) {
  std::vector<double> out;
  for (const auto& r : X) out.insert(out.end(), r.begin(), r.end());
  return out;
}

}  // namespace

const char* to_string(Kind kind) {
  switch (kind) {
    case Kind::LR: return "LR";
    case Kind::KNN: return "KNN";
    case Kind::RbfSvm: return "RBF";
    case Kind::PolySvm: return "Poly";
    case Kind::RF: return "RF";
    case Kind::ET: return "ET";
    case Kind::ANN: return "ANN";
  }
  return "?";
}

Kind parse_kind(std::string_view text) {
  for (Kind k : kAllKinds) {
    if (text == to_string(k)) return k;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown meta-classifier '" + std::string(text) + "'");
}

Predictions predict(const MetaModel& model, const Rows& X) {
  Predictions p;
  p.labels.reserve(X.size());
  p.scores.reserve(X.size());
  for (const auto& x : X) {
    const double s = model.score(x);
    p.scores.push_back(s);
    p.labels.push_back(s > 0.5 ? 1 : 0);
  }
  return p;
}

// ------------------------------------------------------------------ LR

double LogisticModel::score(std::span<const double> x) const {
  if (x.size() != weights.size()) throw Error(ErrorCode::ShapeMismatch, "logistic model input width mismatch");
  double z = intercept;
  for (std::size_t i = 0; i < x.size(); ++i) z += weights[i] * x[i];
  return sigmoid(z);
}

void LogisticModel::save(std::ostream& out) const {
  Dump d;
  d.add("lr.weights", weights);
  d.add("lr.intercept", {intercept});
  d.write(out);
}

double logistic_objective(const Rows& X, std::span<const int> y, std::span<const double> w, double b, double C) {
  double ll = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    double z = b;
    for (std::size_t j = 0; j < w.size(); ++j) z += w[j] * X[i][j];
    // log sigma(z) for y=1, log(1 - sigma(z)) for y=0, both via log1p.
    const double s = y[i] == 1 ? -z : z;
    ll -= s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
  }
  double norm = 0.0;
  for (double v : w) norm += v * v;
  return ll - norm / (2.0 * C);
}

std::shared_ptr<LogisticModel> fit_logistic(const Rows& Xin, std::span<const int> yin, double C) {
  check_xy(Xin, yin);
  require_both_classes(yin);
  if (!(C > 0.0)) throw Error(ErrorCode::InvalidConfig, "logistic C must be positive");
  const auto order = canonical_order(Xin, yin);
  Rows X;
  std::vector<int> y;
  for (auto i : order) {
    X.push_back(Xin[i]);
    y.push_back(yin[i]);
  }
  const std::size_t n = X.size(), d = X[0].size(), m = d + 1;

  // Largest eigenvalue of the augmented Gram matrix by power iteration.
  std::vector<double> G(m * m, 0.0);
  for (const auto& r : X) {
    for (std::size_t a = 0; a < m; ++a) {
      const double xa = a < d ? r[a] : 1.0;
      for (std::size_t b = 0; b < m; ++b) G[a * m + b] += xa * (b < d ? r[b] : 1.0);
    }
  }
  std::vector<double> v(m, 1.0), nv(m);
  double lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    for (std::size_t a = 0; a < m; ++a) {
      nv[a] = 0.0;
      for (std::size_t b = 0; b < m; ++b) nv[a] += G[a * m + b] * v[b];
    }
    const double norm = std::sqrt(std::inner_product(nv.begin(), nv.end(), nv.begin(), 0.0));
    if (norm == 0.0) break;
    lambda = norm / std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    for (std::size_t a = 0; a < m; ++a) v[a] = nv[a] / norm;
  }
  const double L = 0.25 * lambda * 1.01 + 1.0 / C;
  const double step = 1.0 / L;

  auto model = std::make_shared<LogisticModel>();
  model->weights.assign(d, 0.0);
  std::vector<double> grad(m);
  std::size_t it = 0;
  for (; it < 10'000; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double z = model->intercept;
      for (std::size_t j = 0; j < d; ++j) z += model->weights[j] * X[i][j];
      const double r = static_cast<double>(y[i]) - sigmoid(z);
      for (std::size_t j = 0; j < d; ++j) grad[j] += r * X[i][j];
      grad[d] += r;
    }
    for (std::size_t j = 0; j < d; ++j) grad[j] -= model->weights[j] / C;
    const double gnorm = std::sqrt(std::inner_product(grad.begin(), grad.end(), grad.begin(), 0.0));
    if (gnorm < 1e-6) break;
    for (std::size_t j = 0; j < d; ++j) model->weights[j] += step * grad[j];
    model->intercept += step * grad[d];
  }
  model->iterations = it;
  return model;
}

// ----------------------------------------------------------------- KNN

std::vector<std::size_t> KnnModel::neighbors(std::span<const double> x) const {
  std::vector<std::pair<double, std::size_t>> d;
  d.reserve(X.size());
  for (std::size_t i = 0; i < X.size(); ++i) d.emplace_back(sq_dist(x, X[i]), i);
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(d[i].second);
  return out;
}

double KnnModel::score(std::span<const double> x) const {
  std::size_t up = 0;
  for (auto i : neighbors(x)) up += y[i] == 1;
  return static_cast<double>(up) / static_cast<double>(k);
}

void KnnModel::save(std::ostream& out) const {
  Dump d;
  d.add("knn.X", {X.size(), X.empty() ? 0 : X[0].size()}, flatten(X));
  d.add("knn.y", std::vector<double>(y.begin(), y.end()));
  d.add("knn.k", {static_cast<double>(k)});
  d.write(out);
}

std::shared_ptr<KnnModel> fit_knn(const Rows& X, std::span<const int> y, std::size_t k) {
  check_xy(X, y);
  if (k == 0 || k > X.size()) {
    throw Error(ErrorCode::KTooLarge, "k=" + std::to_string(k) + " with " + std::to_string(X.size()) +
                                          " training rows");
  }
  auto m = std::make_shared<KnnModel>();
  m->X = X;
  m->y.assign(y.begin(), y.end());
  m->k = k;
  return m;
}

// ----------------------------------------------------------------- SVM

double SvmKernel::operator()(std::span<const double> a, std::span<const double> b) const {
  if (type == KernelType::Rbf) return std::exp(-gamma * sq_dist(a, b));
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return std::pow(dot / static_cast<double>(std::max<std::size_t>(a.size(), 1)) + 1.0, degree);
}

double SvmModel::decision(std::span<const double> x) const {
  double f = bias;
  for (std::size_t i = 0; i < support.size(); ++i) f += coef[i] * kernel(support[i], x);
  return f;
}

double SvmModel::score(std::span<const double> x) const { return sigmoid(decision(x)); }

void SvmModel::save(std::ostream& out) const {
  Dump d;
  d.add("svm.kernel", {kernel.type == KernelType::Rbf ? 0.0 : 1.0, kernel.gamma, static_cast<double>(kernel.degree)});
  d.add("svm.support", {support.size(), support.empty() ? 0 : support[0].size()}, flatten(support));
  d.add("svm.coef", coef);
  d.add("svm.bias", {bias});
  d.write(out);
}

double svm_dual_objective(const Rows& X, std::span<const int> y, std::span<const double> alpha,
                          const SvmKernel& kernel) {
  double lin = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    lin += alpha[i];
    const double yi = y[i] == 1 ? 1.0 : -1.0;
    for (std::size_t j = 0; j < X.size(); ++j) {
      const double yj = y[j] == 1 ? 1.0 : -1.0;
      quad += alpha[i] * alpha[j] * yi * yj * kernel(X[i], X[j]);
    }
  }
  return lin - 0.5 * quad;
}

std::shared_ptr<SvmModel> fit_svm(const Rows& Xin, std::span<const int> yin, const SvmKernel& kernel, double C,
                                  double tolerance, std::size_t max_iterations) {
  check_xy(Xin, yin);
  require_both_classes(yin);
  if (!(C > 0.0)) throw Error(ErrorCode::InvalidConfig, "SVM C must be positive");
  const auto order = canonical_order(Xin, yin);
  Rows X;
  std::vector<double> y;
  std::vector<int> ylab;
  for (auto i : order) {
    X.push_back(Xin[i]);
    ylab.push_back(yin[i]);
    y.push_back(yin[i] == 1 ? 1.0 : -1.0);
  }
  const std::size_t n = X.size();
  std::vector<double> Q(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) Q[i * n + j] = Q[j * n + i] = y[i] * y[j] * kernel(X[i], X[j]);
  }
  std::vector<double> alpha(n, 0.0), G(n, -1.0);
  constexpr double tau = 1e-12;
  std::size_t it = 0;
  for (;; ++it) {
    double gmax = -std::numeric_limits<double>::infinity(), gmin = std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * G[t];
      const bool up = (y[t] > 0 && alpha[t] < C) || (y[t] < 0 && alpha[t] > 0);
      const bool low = (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < C);
      if (up && v > gmax) {
        gmax = v;
        i = t;
      }
      if (low && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    if (i == n || j == n || gmax - gmin < tolerance) break;
    if (it >= max_iterations) {
      throw Error(ErrorCode::NoConvergence, "SMO did not reach the KKT tolerance within " +
                                                std::to_string(max_iterations) + " iterations");
    }
    const double ai = alpha[i], aj = alpha[j];
    const double* Qi = &Q[i * n];
    const double* Qj = &Q[j * n];
    if (y[i] != y[j]) {
      double quad = Qi[i] + Qj[j] + 2.0 * Qi[j];
      if (quad <= 0) quad = tau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = ai - aj;
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > 0) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = C - diff;
        }
      } else if (alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      double quad = Qi[i] + Qj[j] - 2.0 * Qi[j];
      if (quad <= 0) quad = tau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = ai + aj;
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = sum - C;
        }
      } else if (alpha[j] < 0) {
        alpha[j] = 0;
        alpha[i] = sum;
      }
      if (sum > C) {
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = sum - C;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = sum;
      }
    }
    const double di = alpha[i] - ai, dj = alpha[j] - aj;
    for (std::size_t t = 0; t < n; ++t) G[t] += Q[t * n + i] * di + Q[t * n + j] * dj;
  }

  // Offset from free vectors, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * G[t];
    if (alpha[t] >= C) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++free;
      sum_free += yg;
    }
  }
  const double rho = free > 0 ? sum_free / static_cast<double>(free) : 0.5 * (ub + lb);

  auto m = std::make_shared<SvmModel>();
  m->kernel = kernel;
  m->C = C;
  m->bias = -rho;
  m->alpha = alpha;
  m->iterations = it;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0) {
      m->support.push_back(X[t]);
      m->coef.push_back(alpha[t] * y[t]);
    }
  }
  m->dual_objective = svm_dual_objective(X, ylab, alpha, kernel);
  return m;
}

// -------------------------------------------------------------- forests

double gini(std::size_t up, std::size_t total) {
  if (total == 0) return 0.0;
  const double p = static_cast<double>(up) / static_cast<double>(total);
  return 2.0 * p * (1.0 - p);
}

int Tree::predict(std::span<const double> x) const {
  std::size_t at = 0;
  while (nodes[at].feature >= 0) {
    const auto& nd = nodes[at];
    at = static_cast<std::size_t>(x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right);
  }
  return nodes[at].label;
}

std::vector<int> ForestModel::votes(std::span<const double> x) const {
  std::vector<int> v;
  v.reserve(trees.size());
  for (const auto& t : trees) v.push_back(t.predict(x));
  return v;
}

double ForestModel::score(std::span<const double> x) const {
  if (trees.empty()) return 0.0;
  std::size_t up = 0;
  for (const auto& t : trees) up += t.predict(x) == 1;
  return static_cast<double>(up) / static_cast<double>(trees.size());
}

void ForestModel::save(std::ostream& out) const {
  Dump d;
  d.add("forest.variant", {variant == ForestVariant::RF ? 0.0 : 1.0});
  for (std::size_t t = 0; t < trees.size(); ++t) {
    std::vector<double> flat;
    for (const auto& nd : trees[t].nodes) {
      flat.insert(flat.end(), {static_cast<double>(nd.feature), nd.threshold, static_cast<double>(nd.left),
                               static_cast<double>(nd.right), static_cast<double>(nd.label)});
    }
    d.add("forest.tree" + std::to_string(t), {trees[t].nodes.size(), 5}, std::move(flat));
  }
  d.write(out);
}

namespace {

struct TreeBuilder {
  const Rows& X;
  std::span<const int> y;
  ForestVariant variant;
  Rng& rng;
  std::size_t mtry;
  Tree tree;

  int leaf(const std::vector<std::size_t>& idx) {
    std::size_t up = 0;
    for (auto i : idx) up += y[i] == 1;
    TreeNode nd;
    nd.label = 2 * up > idx.size() ? 1 : 0;
    tree.nodes.push_back(nd);
    return static_cast<int>(tree.nodes.size() - 1);
  }

  // Best split on one feature; returns weighted child impurity (infinity if none).
  double best_split(const std::vector<std::size_t>& idx, std::size_t f, double& threshold) {
    const std::size_t n = idx.size();
    std::size_t total_up = 0;
    for (auto i : idx) total_up += y[i] == 1;
    if (variant == ForestVariant::ET) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (auto i : idx) {
        lo = std::min(lo, X[i][f]);
        hi = std::max(hi, X[i][f]);
      }
      if (!(hi > lo)) return std::numeric_limits<double>::infinity();
      double t = lo + rng.uniform() * (hi - lo);
      if (t >= hi) t = lo;
      std::size_t ln = 0, lu = 0;
      for (auto i : idx) {
        if (X[i][f] <= t) {
          ++ln;
          lu += y[i] == 1;
        }
      }
      threshold = t;
      return (static_cast<double>(ln) * gini(lu, ln) + static_cast<double>(n - ln) * gini(total_up - lu, n - ln)) /
             static_cast<double>(n);
    }
    std::vector<std::size_t> sorted = idx;
    std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) { return X[a][f] < X[b][f]; });
    double best = std::numeric_limits<double>::infinity();
    std::size_t lu = 0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      lu += y[sorted[k]] == 1;
      const double a = X[sorted[k]][f], b = X[sorted[k + 1]][f];
      if (!(b > a)) continue;
      const std::size_t ln = k + 1;
      const double imp =
          (static_cast<double>(ln) * gini(lu, ln) + static_cast<double>(n - ln) * gini(total_up - lu, n - ln)) /
          static_cast<double>(n);
      if (imp < best) {
        best = imp;
        threshold = a + 0.5 * (b - a);
        if (!(threshold < b)) threshold = a;
      }
    }
    return best;
  }

  int build(const std::vector<std::size_t>& idx) {
    std::size_t up = 0;
    for (auto i : idx) up += y[i] == 1;
    if (idx.size() < 2 || up == 0 || up == idx.size()) return leaf(idx);
    const std::size_t d = X[0].size();
    std::vector<std::size_t> features(d);
    std::iota(features.begin(), features.end(), std::size_t{0});
    rng.shuffle(features);
    double best = std::numeric_limits<double>::infinity(), best_t = 0.0;
    std::size_t best_f = d;
    // Sampled features first; fall back to the rest only when none splits.
    for (std::size_t k = 0; k < d; ++k) {
      if (k >= mtry && best_f < d) break;
      double t = 0.0;
      const double imp = best_split(idx, features[k], t);
      if (imp < best) {
        best = imp;
        best_t = t;
        best_f = features[k];
      }
    }
    if (best_f == d) return leaf(idx);
    std::vector<std::size_t> left, right;
    for (auto i : idx) (X[i][best_f] <= best_t ? left : right).push_back(i);
    if (left.empty() || right.empty()) return leaf(idx);
    const int self = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({static_cast<int>(best_f), best_t, -1, -1, 2 * up > idx.size() ? 1 : 0});
    const int l = build(left);
    const int r = build(right);
    tree.nodes[static_cast<std::size_t>(self)].left = l;
    tree.nodes[static_cast<std::size_t>(self)].right = r;
    return self;
  }
};

}  // namespace

std::shared_ptr<ForestModel> fit_forest(const Rows& X, std::span<const int> y, std::size_t n_trees,
                                        ForestVariant variant, std::uint64_t seed) {
  check_xy(X, y);
  if (n_trees == 0) throw Error(ErrorCode::InvalidConfig, "forest needs at least one tree");
  const std::size_t n = X.size(), d = X[0].size();
  const std::size_t mtry = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));
  auto m = std::make_shared<ForestModel>();
  m->variant = variant;
  std::vector<std::size_t> oob_up(n, 0), oob_total(n, 0);
  for (std::size_t t = 0; t < n_trees; ++t) {
    Rng rng(derive_seed(seed, {t}));
    std::vector<std::size_t> idx(n);
    std::vector<bool> in_bag(n, variant == ForestVariant::ET);
    if (variant == ForestVariant::RF) {
      for (auto& i : idx) {
        i = rng.index(n);
        in_bag[i] = true;
      }
      std::sort(idx.begin(), idx.end());
    } else {
      std::iota(idx.begin(), idx.end(), std::size_t{0});
    }
    TreeBuilder b{X, y, variant, rng, mtry, {}};
    b.build(idx);
    m->trees.push_back(std::move(b.tree));
    if (variant == ForestVariant::RF) {
      for (std::size_t i = 0; i < n; ++i) {
        if (in_bag[i]) continue;
        ++oob_total[i];
        oob_up[i] += m->trees.back().predict(X[i]) == 1;
      }
    }
  }
  if (variant == ForestVariant::RF) {
    std::size_t hit = 0, seen = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (oob_total[i] == 0) continue;
      ++seen;
      hit += (2 * oob_up[i] > oob_total[i] ? 1 : 0) == y[i];
    }
    m->oob_accuracy = seen ? static_cast<double>(hit) / static_cast<double>(seen)
                           : std::numeric_limits<double>::quiet_NaN();
  }
  return m;
}

// ----------------------------------------------------------------- ANN

MlpNet::MlpNet(std::size_t inputs, const std::array<std::size_t, 3>& widths) {
  std::size_t in = inputs;
  for (std::size_t l = 0; l < 3; ++l) {
    if (widths[l] == 0) throw Error(ErrorCode::InvalidConfig, "hidden layer width must be positive");
    layers_.emplace_back("mlp.l" + std::to_string(l), in, widths[l], nn::Activation::ReLU);
    in = widths[l];
  }
  layers_.emplace_back("mlp.out", in, 2, nn::Activation::Identity);
}

void MlpNet::initialize(Rng& rng) {
  for (auto& l : layers_) {
    auto& w = l.weights().value;
    nn::glorot_uniform(w, w.dim(0), w.dim(1), rng);
    l.bias().value.fill(0.0);
  }
}

nn::Tensor MlpNet::forward(const nn::Tensor& x) {
  nn::Tensor h = x;
  for (auto& l : layers_) h = l.forward(h);
  return h;
}

void MlpNet::backward(const nn::Tensor& grad_logits) {
  nn::Tensor g = grad_logits;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = it->backward(g);
}

std::vector<nn::Parameter*> MlpNet::parameters() {
  std::vector<nn::Parameter*> out;
  for (auto& l : layers_) {
    for (auto* p : l.parameters()) out.push_back(p);
  }
  return out;
}

std::vector<double> MlpNet::logits(std::span<const double> x) const {
  std::vector<double> h(x.begin(), x.end());
  for (const auto& l : layers_) h = nn::dense_forward(h, l.weights().value, l.bias().value.values(), l.activation());
  return h;
}

double MlpModel::score(std::span<const double> x) const {
  const auto z = net.logits(x);
  return nn::softmax(z)[1];
}

void MlpModel::save(std::ostream& out) const {
  MlpNet copy = net;
  std::vector<nn::NamedTensor> nt;
  for (auto* p : copy.parameters()) nt.push_back({p->name, &p->value});
  nn::save_checkpoint(out, nt);
}

std::shared_ptr<MlpModel> fit_mlp(const Rows& Xin, std::span<const int> yin, const MlpConfig& config,
                                  std::uint64_t seed) {
  check_xy(Xin, yin);
  if (Xin.size() < 2) throw Error(ErrorCode::TooFewSamples, "ANN needs at least 2 training rows");
  const auto order = canonical_order(Xin, yin);
  const std::size_t n = Xin.size(), d = Xin[0].size();
  nn::Tensor X({n, d});
  std::vector<int> y;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) X.at(r, c) = Xin[order[r]][c];
    y.push_back(yin[order[r]]);
  }
  MlpNet net(d, config.widths);
  Rng rng(seed);
  net.initialize(rng);
  nn::TrainConfig tc;
  tc.epochs = config.epochs;
  tc.batch_size = config.batch_size;
  tc.adam.learning_rate = config.learning_rate;
  auto params = net.parameters();
  nn::Tensor batch;
  nn::train_classifier(
      params, y, tc, rng,
      [&](std::span<const std::size_t> rows) {
        batch = nn::Tensor({rows.size(), d});
        for (std::size_t r = 0; r < rows.size(); ++r) {
          for (std::size_t c = 0; c < d; ++c) batch.at(r, c) = X.at(rows[r], c);
        }
        return net.forward(batch);
      },
      [&](const nn::Tensor& g) { net.backward(g); });
  auto m = std::make_shared<MlpModel>(std::move(net));
  m->widths = config.widths;
  return m;
}

// -------------------------------------------------------- hyper-params

ModelPtr fit_kind(Kind kind, const Rows& X, std::span<const int> y, const MetaHyper& h, std::uint64_t seed) {
  const std::uint64_t s = derive_seed(seed, {static_cast<std::uint64_t>(kind)});
  switch (kind) {
    case Kind::LR:
      return fit_logistic(X, y, h.lr_C);
    case Kind::KNN:
      return fit_knn(X, y, std::min(h.knn_k, X.size()));
    case Kind::RbfSvm:
      return fit_svm(X, y, {KernelType::Rbf, h.rbf_gamma, 2}, h.rbf_C);
    case Kind::PolySvm:
      return fit_svm(X, y, {KernelType::Poly, 1.0, h.poly_degree}, h.poly_C);
    case Kind::RF:
      return fit_forest(X, y, h.rf_trees, ForestVariant::RF, s);
    case Kind::ET:
      return fit_forest(X, y, h.et_trees, ForestVariant::ET, s);
    case Kind::ANN: {
      MlpConfig c;
      c.widths = h.ann_widths;
      return fit_mlp(X, y, c, s);
    }
  }
  throw Error(ErrorCode::InvalidConfig, "unknown meta-classifier kind");
}

std::string hyper_key(Kind kind, const MetaHyper& h) {
  std::string k = to_string(kind);
  k += ':';
  switch (kind) {
    case Kind::LR: return k + csv::format_double(h.lr_C);
    case Kind::KNN: return k + std::to_string(h.knn_k);
    case Kind::RbfSvm: return k + csv::format_double(h.rbf_C) + "," + csv::format_double(h.rbf_gamma);
    case Kind::PolySvm: return k + csv::format_double(h.poly_C) + "," + std::to_string(h.poly_degree);
    case Kind::RF: return k + std::to_string(h.rf_trees);
    case Kind::ET: return k + std::to_string(h.et_trees);
    case Kind::ANN:
      return k + std::to_string(h.ann_widths[0]) + "," + std::to_string(h.ann_widths[1]) + "," +
             std::to_string(h.ann_widths[2]);
  }
  return k;
}

}  // namespace tdse::meta
