#include "tdse/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tdse/error.hpp"
#include "tdse/rng.hpp"

namespace tdse::spectral {

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

void require_square(const Matrix& M, const char* what) {
  for (const auto& row : M) {
    if (row.size() != M.size()) throw Error(ErrorCode::ShapeMismatch, std::string(what) + " must be square");
  }
}

std::vector<std::size_t> canonical_ids(const std::vector<std::size_t>& assignment, std::size_t k) {
  std::vector<std::size_t> map(k, k);
  std::size_t next = 0;
  std::vector<std::size_t> out(assignment.size());
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (map[assignment[i]] == k) map[assignment[i]] = next++;
    out[i] = map[assignment[i]];
  }
  return out;
}

Matrix centroids_of(const Matrix& rows, const std::vector<std::size_t>& assignment, std::size_t k) {
  const std::size_t dim = rows.empty() ? 0 : rows[0].size();
  Matrix c(k, std::vector<double>(dim, 0.0));
  std::vector<std::size_t> count(k, 0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ++count[assignment[i]];
    for (std::size_t d = 0; d < dim; ++d) c[assignment[i]][d] += rows[i][d];
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (count[j] == 0) continue;
    for (auto& v : c[j]) v /= static_cast<double>(count[j]);
  }
  return c;
}

std::size_t nearest(const std::vector<double>& x, const Matrix& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < centroids.size(); ++j) {
    const double d = sq_dist(x, centroids[j]);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

Matrix plus_plus_seeds(const Matrix& rows, std::size_t k, Rng& rng) {
  const std::size_t n = rows.size();
  Matrix centers;
  std::vector<bool> chosen(n, false);
  std::size_t first = rng.index(n);
  centers.push_back(rows[first]);
  chosen[first] = true;
  std::vector<double> d2(n);
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = chosen[i] ? 0.0 : sq_dist(rows[i], centers[nearest(rows[i], centers)]);
      total += d2[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        pick = i;
        if (u < d2[i]) break;
        u -= d2[i];
      }
    } else {
      std::vector<std::size_t> free;
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) free.push_back(i);
      }
      pick = free[rng.index(free.size())];
    }
    chosen[pick] = true;
    centers.push_back(rows[pick]);
  }
  return centers;
}

// Gives every empty cluster the point farthest from its own centroid, taken
// from a cluster that keeps at least one member.
void repair_empty(const Matrix& rows, std::vector<std::size_t>& assignment, std::size_t k, Matrix& centroids) {
  for (;;) {
    std::vector<std::size_t> count(k, 0);
    for (auto a : assignment) ++count[a];
    const auto empty = std::find(count.begin(), count.end(), std::size_t{0});
    if (empty == count.end()) return;
    std::size_t far = rows.size();
    double far_d = -1.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (count[assignment[i]] < 2) continue;
      const double d = sq_dist(rows[i], centroids[assignment[i]]);
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    if (far == rows.size()) return;
    assignment[far] = static_cast<std::size_t>(empty - count.begin());
    centroids = centroids_of(rows, assignment, k);
  }
}

// Moves single points between clusters while the exact change in inertia,
// including the centroid shifts, is negative.
void single_moves(const Matrix& rows, std::vector<std::size_t>& assignment, std::size_t k) {
  const std::size_t n = rows.size();
  for (std::size_t pass = 0; pass < 100; ++pass) {
    bool moved = false;
    for (std::size_t i = 0; i < n; ++i) {
      Matrix c = centroids_of(rows, assignment, k);
      std::vector<std::size_t> count(k, 0);
      for (auto a : assignment) ++count[a];
      const std::size_t from = assignment[i];
      if (count[from] < 2) continue;
      const double nf = static_cast<double>(count[from]);
      const double loss = nf / (nf - 1.0) * sq_dist(rows[i], c[from]);
      std::size_t best = from;
      double best_gain = 1e-12 * (1.0 + loss);
      for (std::size_t j = 0; j < k; ++j) {
        if (j == from) continue;
        const double nj = static_cast<double>(count[j]);
        const double add = nj / (nj + 1.0) * sq_dist(rows[i], c[j]);
        if (loss - add > best_gain) {
          best_gain = loss - add;
          best = j;
        }
      }
      if (best != from) {
        assignment[i] = best;
        moved = true;
      }
    }
    if (!moved) return;
  }
}

}  // namespace

void validate(const IndustryMatrix& m) {
  if (m.features.size() < 2) throw Error(ErrorCode::TooFewRows, "industry matrix needs at least 2 rows");
  if (!m.industries.empty() && m.industries.size() != m.features.size()) {
    throw Error(ErrorCode::ShapeMismatch, "industry names and feature rows differ in count");
  }
  const std::size_t l = m.features[0].size();
  if (l == 0) throw Error(ErrorCode::ShapeMismatch, "industry features are empty");
  for (const auto& row : m.features) {
    if (row.size() != l) throw Error(ErrorCode::ShapeMismatch, "industry feature rows differ in length");
    for (double v : row) {
      if (!std::isfinite(v)) throw Error(ErrorCode::MalformedRow, "industry feature is not finite");
    }
  }
}

Matrix similarity_matrix(const Matrix& features, double sigma, bool squared_distance) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::NonPositiveSigma, "similarity width must be positive, got " + std::to_string(sigma));
  }
  const std::size_t n = features.size();
  Matrix A(n, std::vector<double>(n, 1.0));
  const double scale = 2.0 * sigma * sigma;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d2 = sq_dist(features[i], features[j]);
      const double d = squared_distance ? d2 : std::sqrt(d2);
      A[i][j] = A[j][i] = std::exp(-d / scale);
    }
  }
  return A;
}

Matrix normalized_laplacian(const Matrix& A) {
  require_square(A, "similarity matrix");
  const std::size_t n = A.size();
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::accumulate(A[i].begin(), A[i].end(), 0.0);
    if (!(d > 0.0)) throw Error(ErrorCode::ZeroDegreeRow, "row " + std::to_string(i) + " has zero degree");
    inv_sqrt[i] = 1.0 / std::sqrt(d);
  }
  Matrix L(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::accumulate(A[i].begin(), A[i].end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double lij = (i == j ? d : 0.0) - A[i][j];
      L[i][j] = inv_sqrt[i] * lij * inv_sqrt[j];
    }
  }
  return L;
}

EigenDecomposition symmetric_eigen(const Matrix& M, std::size_t max_sweeps) {
  require_square(M, "eigen input");
  const std::size_t n = M.size();
  Matrix a = M;
  Matrix v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  double scale = 0.0;
  for (const auto& row : a) {
    for (double x : row) scale += x * x;
  }
  const double tol = std::max(scale, 1e-300) * 1e-30;
  bool converged = n < 2;
  for (std::size_t sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    }
    if (off <= tol) {
      converged = true;
      break;
    }
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t r = 0; r < n; ++r) {
          const double arp = a[r][p], arq = a[r][q];
          a[r][p] = c * arp - s * arq;
          a[r][q] = s * arp + c * arq;
        }
        for (std::size_t r = 0; r < n; ++r) {
          const double apr = a[p][r], aqr = a[q][r];
          a[p][r] = c * apr - s * aqr;
          a[q][r] = s * apr + c * aqr;
        }
        for (std::size_t r = 0; r < n; ++r) {
          const double vrp = v[r][p], vrq = v[r][q];
          v[r][p] = c * vrp - s * vrq;
          v[r][q] = s * vrp + c * vrq;
        }
      }
    }
  }
  if (!converged) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    }
    if (off > tol) throw Error(ErrorCode::ConvergenceFailure, "Jacobi sweeps did not converge");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a[x][x] < a[y][y]; });
  EigenDecomposition out;
  for (auto idx : order) {
    out.values.push_back(a[idx][idx]);
    std::vector<double> vec(n);
    for (std::size_t r = 0; r < n; ++r) vec[r] = v[r][idx];
    std::size_t big = 0;
    for (std::size_t r = 1; r < n; ++r) {
      if (std::abs(vec[r]) > std::abs(vec[big]) + 1e-12) big = r;
    }
    if (vec[big] < 0.0) {
      for (auto& x : vec) x = -x;
    }
    out.vectors.push_back(std::move(vec));
  }
  return out;
}

Matrix smallest_eigenvectors(const Matrix& M, std::size_t k, std::vector<double>* eigenvalues) {
  if (k == 0 || k > M.size()) {
    throw Error(ErrorCode::KTooLarge, "requested " + std::to_string(k) + " eigenvectors of a " +
                                          std::to_string(M.size()) + "-row matrix");
  }
  const auto eig = symmetric_eigen(M);
  Matrix Z(M.size(), std::vector<double>(k));
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < M.size(); ++i) Z[i][j] = eig.vectors[j][i];
  }
  if (eigenvalues) eigenvalues->assign(eig.values.begin(), eig.values.begin() + static_cast<std::ptrdiff_t>(k));
  return Z;
}

double inertia(const Matrix& rows, const std::vector<std::size_t>& assignment, std::size_t k) {
  const Matrix c = centroids_of(rows, assignment, k);
  double s = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) s += sq_dist(rows[i], c[assignment[i]]);
  return s;
}

Clustering kmeans(const Matrix& rows, std::size_t k, std::uint64_t seed, std::size_t restarts,
                  std::size_t max_iterations) {
  const std::size_t n = rows.size();
  if (k == 0 || n < k) {
    throw Error(ErrorCode::TooFewRows, "k-means with k=" + std::to_string(k) + " needs at least k rows, got " +
                                           std::to_string(n));
  }
  Clustering best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < std::max<std::size_t>(restarts, 1); ++r) {
    Rng rng(derive_seed(seed, {r}));
    Matrix centroids = plus_plus_seeds(rows, k, rng);
    std::vector<std::size_t> assignment(n, k);
    std::vector<double> history;
    for (std::size_t it = 0; it < max_iterations; ++it) {
      bool changed = false;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = nearest(rows[i], centroids);
        if (j != assignment[i]) {
          assignment[i] = j;
          changed = true;
        }
      }
      centroids = centroids_of(rows, assignment, k);
      repair_empty(rows, assignment, k, centroids);
      history.push_back(inertia(rows, assignment, k));
      if (!changed) break;
    }
    single_moves(rows, assignment, k);
    const double value = inertia(rows, assignment, k);
    if (value < history.back()) history.push_back(value);
    if (value < best.inertia - 1e-12 * (1.0 + value)) {
      best.k = k;
      best.inertia = value;
      best.assignment = assignment;
      best.history = std::move(history);
    }
  }
  best.assignment = canonical_ids(best.assignment, k);
  best.centroids = centroids_of(rows, best.assignment, k);
  return best;
}

double median_pairwise_distance(const Matrix& features) {
  std::vector<double> d;
  for (std::size_t i = 0; i < features.size(); ++i) {
    for (std::size_t j = i + 1; j < features.size(); ++j) d.push_back(std::sqrt(sq_dist(features[i], features[j])));
  }
  if (d.empty()) return 0.0;
  std::sort(d.begin(), d.end());
  const std::size_t m = d.size() / 2;
  return d.size() % 2 ? d[m] : 0.5 * (d[m - 1] + d[m]);
}

namespace {

Matrix embed(const IndustryMatrix& m, const SpectralOptions& options, const EigenDecomposition& eig, std::size_t k) {
  const std::size_t n = m.features.size();
  Matrix Z(n, std::vector<double>(k));
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < n; ++i) Z[i][j] = eig.vectors[j][i];
  }
  if (options.row_normalize) {
    for (auto& row : Z) {
      const double norm = std::sqrt(std::inner_product(row.begin(), row.end(), row.begin(), 0.0));
      if (norm > 0.0) {
        for (auto& x : row) x /= norm;
      }
    }
  }
  return Z;
}

double resolve_sigma(const IndustryMatrix& m, std::optional<double> sigma) {
  if (sigma) return *sigma;
  const double med = median_pairwise_distance(m.features);
  return med > 0.0 ? med : 1.0;
}

EigenDecomposition laplacian_eigen(const IndustryMatrix& m, double sigma, const SpectralOptions& options) {
  return symmetric_eigen(normalized_laplacian(similarity_matrix(m.features, sigma, options.squared_distance)));
}

}  // namespace

std::size_t elbow_index(std::span<const double> inertias) {
  if (inertias.size() < 3) throw Error(ErrorCode::RangeTooNarrow, "elbow needs at least 3 inertia values");
  const double top = *std::max_element(inertias.begin(), inertias.end());
  if (top <= 0.0) return 0;
  std::size_t pick = 1;
  double best = -std::numeric_limits<double>::infinity();
  const double tol = 1e-12 * top;
  for (std::size_t i = 1; i + 1 < inertias.size(); ++i) {
    const double second = inertias[i - 1] - 2.0 * inertias[i] + inertias[i + 1];
    if (second > best + tol) {
      best = second;
      pick = i;
    }
  }
  return pick;
}

ElbowResult elbow_select_k(const IndustryMatrix& m, double sigma, std::size_t k_min, std::size_t k_max,
                           std::uint64_t seed, const SpectralOptions& options) {
  validate(m);
  const std::size_t n = m.features.size();
  if (k_min < 2 || k_max > n - 1 || k_max < k_min || k_max - k_min + 1 < 3) {
    throw Error(ErrorCode::RangeTooNarrow, "elbow needs at least 3 candidate k within [2, " + std::to_string(n - 1) +
                                               "], got [" + std::to_string(k_min) + ", " + std::to_string(k_max) +
                                               "]");
  }
  const auto eig = laplacian_eigen(m, sigma, options);
  ElbowResult out;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    const Clustering c = kmeans(embed(m, options, eig, k), k, derive_seed(seed, {k}), options.restarts,
                                options.max_iterations);
    out.candidates.push_back(k);
    out.inertias.push_back(inertia(m.features, c.assignment, k));
  }
  out.k = out.candidates[elbow_index(out.inertias)];
  return out;
}

Clustering cluster_industries(const IndustryMatrix& m, std::optional<double> sigma, std::optional<std::size_t> k,
                              std::uint64_t seed, const SpectralOptions& options) {
  validate(m);
  const double s = resolve_sigma(m, sigma);
  const std::size_t n = m.features.size();
  std::size_t chosen = 0;
  if (k) {
    chosen = *k;
  } else {
    const std::size_t hi = std::min<std::size_t>(n - 1, 10);
    chosen = hi >= 4 ? elbow_select_k(m, s, 2, hi, seed, options).k : std::min<std::size_t>(2, n);
  }
  if (chosen == 0 || chosen > n) {
    throw Error(ErrorCode::KTooLarge, "cluster count " + std::to_string(chosen) + " invalid for " + std::to_string(n) +
                                          " industries");
  }
  const auto eig = laplacian_eigen(m, s, options);
  return kmeans(embed(m, options, eig, chosen), chosen, derive_seed(seed, {chosen}), options.restarts,
                options.max_iterations);
}

void write_clustering_csv(std::ostream& out, const std::vector<std::string>& industries, const Clustering& c) {
  out << "industry,cluster\n";
  for (std::size_t i = 0; i < c.assignment.size(); ++i) {
    out << (i < industries.size() ? industries[i] : std::to_string(i)) << ',' << c.assignment[i] << '\n';
  }
}

}  // namespace tdse::spectral
