#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "anie/coeffs.hpp"

namespace anie {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, std::int64_t>;

struct SubspaceEstimate {
  Eigen::MatrixXd U_hat;              // N x D, orthonormal columns
  std::vector<double> singular_values;  // retained spectrum, non-increasing
  int rank = 0;
  // Number of requested directions with a zero singular value.
  int deficient = 0;
  int iterations = 0;
  double residual = 0.0;  // max_i ||X X^T u_i - sigma_i^2 u_i|| / sigma_1^2
};

// X = [Y(phi^1)^T | ... | Y(phi^B)^T], N x (N*B).
SparseMatrix build_X(const CoeffSet& coeffs);

struct SvdOptions {
  int rank = 1;
  std::uint64_t seed = 0;
  double tolerance = 1e-10;
  int max_iterations = 2000;
  int oversampling = 10;
  // Number of singular values kept for scree export (at least rank).
  int scree_count = 0;
};

// Rank-D truncated SVD of X by block subspace iteration with Rayleigh-Ritz
// extraction. Deterministic for a fixed seed. Throws ParameterError when
// D > N or D < 1 and NumericError on non-convergence.
SubspaceEstimate truncated_svd(const SparseMatrix& X, const SvdOptions& options);
SubspaceEstimate truncated_svd(const Eigen::MatrixXd& X, const SvdOptions& options);
// Matrix-free variant working directly on the coefficient lists.
SubspaceEstimate truncated_svd(const CoeffSet& coeffs, const SvdOptions& options);

std::vector<std::pair<int, double>> scree(const SubspaceEstimate& est);

// min_Q ||A Q - B|| over orthogonal Q: Q = L R^T from the SVD A^T B = L S R^T.
Eigen::MatrixXd procrustes_rotation(const Eigen::MatrixXd& A,
                                    const Eigen::MatrixXd& B);

// ||P_A - P_B||_2 for the orthogonal projectors onto span(A), span(B).
double projector_distance(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

void save_scree_csv(const SubspaceEstimate& est, const std::filesystem::path& path);
void save_subspace_csv(const SubspaceEstimate& est, const std::filesystem::path& path);
Eigen::MatrixXd load_matrix_csv(const std::filesystem::path& path);

}  // namespace anie
