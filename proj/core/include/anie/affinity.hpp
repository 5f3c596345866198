#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "anie/basis.hpp"
#include "anie/coeffs.hpp"
#include "anie/subspace.hpp"

namespace anie {

// Which basis functions enter the multiple-testing family. Functions outside
// the scope are always retained.
struct TestScope {
  std::vector<bool> tested;  // one flag per basis function
};

// Per-basis D x D empirical affinity coefficients and their test results.
struct AffinityResult {
  int rank = 0;
  int basis_size = 0;
  double alpha = 0.0;
  std::vector<Eigen::MatrixXd> S_hat;
  std::vector<Eigen::MatrixXd> var_hat;
  std::vector<Eigen::MatrixXd> z;
  std::vector<Eigen::MatrixXd> p_raw;
  std::vector<Eigen::MatrixXd> p_adj;
  std::vector<Eigen::MatrixXi> testable;  // 1 where var_hat > 0
  std::vector<Eigen::MatrixXi> mask;
  std::vector<Eigen::MatrixXd> S_thresh;
  std::vector<bool> tested;  // scope used for the last thresholding
};

// S_hat[b] = U^T Y(phi^b) U and var_hat[b](p,q) = sum U_up^2 U_vq^2 Y_uv(phi^b^2),
// accumulated over the stored entries only.
AffinityResult affinity_coeffs(const CoeffSet& coeffs, const SubspaceEstimate& sub);

// z = S_hat / sqrt(var_hat); zero-variance entries get z = 0 and are marked
// untestable.
void compute_z_scores(AffinityResult& result);

// Standard normal CDF, erfc-based.
double normal_cdf(double x);
// 2 (1 - Phi(|z|)) computed without cancellation.
double two_sided_p(double z);

struct BhOutcome {
  std::vector<bool> rejected;
  std::vector<double> adjusted;  // monotone BH adjusted p-values, capped at 1
};

// Step-up Benjamini-Hochberg over one family. Throws ParameterError unless
// alpha is in (0, 1].
BhOutcome benjamini_hochberg(std::span<const double> p_values, double alpha);

// Haar families exempt the scaling function (b = 0); generic families test
// every function unless exempt_first_generic is set.
TestScope scope_scaling_exclusion(const BasisSet& basis,
                                  bool exempt_first_generic = false);

// Two-sided p-values and one joint BH family over every testable (p, q, b)
// with b in scope. Fills p_raw, p_adj, mask and S_thresh.
void bh_threshold(AffinityResult& result, double alpha, const TestScope& scope);

// bh_threshold extended to alpha = 0, where no tested coefficient survives.
void threshold(AffinityResult& result, double alpha, const TestScope& scope);

// affinity_coeffs -> compute_z_scores -> threshold.
AffinityResult estimate_affinity(const CoeffSet& coeffs, const SubspaceEstimate& sub,
                                 const BasisSet& basis, double alpha);

std::string affinity_to_json(const AffinityResult& result);
AffinityResult affinity_from_json(std::string_view json);

}  // namespace anie
