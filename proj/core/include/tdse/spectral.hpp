#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace tdse::spectral {

using Matrix = std::vector<std::vector<double>>;

/// n industries, each described by l feature values (e.g. its daily returns).
struct IndustryMatrix {
  std::vector<std::string> industries;
  Matrix features;  // [n][l]
};

void validate(const IndustryMatrix& m);

struct SpectralOptions {
  bool squared_distance = false;  // exp(-d^2 / 2s^2) instead of exp(-d / 2s^2)
  bool row_normalize = false;     // scale embedded rows to unit length before k-means
  std::size_t restarts = 10;
  std::size_t max_iterations = 300;
};

/// A_ij = exp(-d(F_i, F_j) / (2 sigma^2)), d Euclidean (or squared).
Matrix similarity_matrix(const Matrix& features, double sigma, bool squared_distance = false);

/// D^{-1/2} (D - A) D^{-1/2}.
Matrix normalized_laplacian(const Matrix& A);

struct EigenDecomposition {
  std::vector<double> values;  // ascending
  Matrix vectors;              // vectors[i] is the eigenvector of values[i]
};

/// Cyclic Jacobi. Each vector's largest-magnitude component is made positive.
EigenDecomposition symmetric_eigen(const Matrix& M, std::size_t max_sweeps = 100);

/// n x k matrix whose columns are the eigenvectors of the k smallest eigenvalues.
Matrix smallest_eigenvectors(const Matrix& M, std::size_t k, std::vector<double>* eigenvalues = nullptr);

struct Clustering {
  std::size_t k = 0;
  std::vector<std::size_t> assignment;  // cluster ids numbered by first appearance
  Matrix centroids;                     // [k][dim]
  double inertia = 0.0;
  /// Inertia after each Lloyd iteration of the winning restart.
  std::vector<double> history;
};

double inertia(const Matrix& rows, const std::vector<std::size_t>& assignment, std::size_t k);

/// k-means++ seeding, Lloyd iterations with empty-cluster repair, then
/// single-point moves while they lower inertia; best of `restarts`.
Clustering kmeans(const Matrix& rows, std::size_t k, std::uint64_t seed, std::size_t restarts = 10,
                  std::size_t max_iterations = 300);

double median_pairwise_distance(const Matrix& features);

struct ElbowResult {
  std::size_t k = 0;
  std::vector<std::size_t> candidates;
  std::vector<double> inertias;  // in the original feature space
};

/// Clusters for every k in [k_min, k_max] and picks the k with the largest
/// second difference of the inertia curve; ties go to the smallest k. A flat
/// zero curve returns k_min.
/// Position of the largest second difference among interior points; ties go
/// to the earliest, an all-zero curve gives 0.
std::size_t elbow_index(std::span<const double> inertias);

ElbowResult elbow_select_k(const IndustryMatrix& m, double sigma, std::size_t k_min, std::size_t k_max,
                           std::uint64_t seed, const SpectralOptions& options = {});

/// Full pipeline. sigma defaults to the median pairwise distance (1 when that
/// is zero); k defaults to the elbow choice over [2, min(n - 1, 10)].
Clustering cluster_industries(const IndustryMatrix& m, std::optional<double> sigma, std::optional<std::size_t> k,
                              std::uint64_t seed, const SpectralOptions& options = {});

void write_clustering_csv(std::ostream& out, const std::vector<std::string>& industries, const Clustering& c);

}  // namespace tdse::spectral
