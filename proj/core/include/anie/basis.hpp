#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace anie {

enum class BasisKind { haar_scaling, haar_detail, generic };

struct BasisFunction {
  int id = 0;
  BasisKind kind = BasisKind::generic;
  int level = 0;              // j, detail functions only
  std::int64_t location = 0;  // k in [0, 2^j), detail functions only
  double support_lo = 0.0;
  double support_hi = 1.0;
};

// A real function on [0, 1] given either as samples on a sorted grid
// (linearly interpolated) or as a black-box evaluator.
class RawFunction {
 public:
  explicit RawFunction(std::function<double(double)> fn);
  RawFunction(std::vector<double> grid, std::vector<double> values);

  double operator()(double t) const;

  bool is_sampled() const noexcept { return !grid_.empty(); }
  const std::vector<double>& grid() const noexcept { return grid_; }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::function<double(double)> fn_;
  std::vector<double> grid_;
  std::vector<double> values_;
};

struct OrthonormalizeOptions {
  int quadrature_panels = 1 << 14;
  // Reject Gram matrices whose condition number exceeds this.
  double max_condition = 1e12;
};

// An ordered orthonormal family {phi^b} on [0, 1]. Haar families are closed
// form; generic families are G^{-1/2}-mixtures of raw functions.
class BasisSet {
 public:
  BasisSet() = default;

  int size() const noexcept { return static_cast<int>(functions_.size()); }
  std::span<const BasisFunction> functions() const noexcept { return functions_; }
  const BasisFunction& function(int b) const { return functions_.at(b); }

  bool is_haar() const noexcept { return haar_; }
  // J for Haar families (B = 2^J); 0 for generic families.
  int max_level() const noexcept { return max_level_; }

  // Throws DomainError for t outside [0, 1].
  double eval(int b, double t) const;
  double eval_squared(int b, double t) const;

  // Generic families only: the mixing matrix W with phi^b = sum_l W(b,l) raw_l.
  const Eigen::MatrixXd& mixing() const noexcept { return mixing_; }
  std::span<const RawFunction> raw_functions() const noexcept { return raw_; }

  // JSON descriptor (`{"kind":"haar","J":..}` or `{"kind":"custom",...}`).
  std::string descriptor() const;
  // Stable 64-bit FNV-1a hash of the descriptor.
  std::uint64_t descriptor_hash() const;

  friend BasisSet haar_basis(int J);
  friend BasisSet orthonormalize(std::vector<RawFunction> raw,
                                 const OrthonormalizeOptions& options);

 private:
  std::vector<BasisFunction> functions_;
  bool haar_ = false;
  int max_level_ = 0;
  std::vector<RawFunction> raw_;
  Eigen::MatrixXd mixing_;
};

// Scaling function 1_[0,1] followed by psi_{j,k}, j = 0..J-1, k = 0..2^j-1.
BasisSet haar_basis(int J);

// Index of psi_{j,k} in a Haar family.
inline int haar_index(int j, std::int64_t k) {
  return static_cast<int>((std::int64_t{1} << j) + k);
}

// 2^{j/2}, the height of psi_{j,k} on its support.
double haar_height(int j);

// Position of t at level j+1 (the half-cells of level j): the fine cell index
// m in [0, 2^{j+1}); psi_{j, m/2} is positive iff m is even. Half-open cells,
// with t = 1 assigned to the last one.
std::int64_t haar_fine_cell(int j, double t);

// Orthonormalizes a linearly independent family via the symmetric inverse
// square root of its quadrature Gram matrix. Throws IllConditionedBasisError.
BasisSet orthonormalize(std::vector<RawFunction> raw,
                        const OrthonormalizeOptions& options = {});

// Composite midpoint-rule Gram matrix G(k,l) = int raw_k raw_l on [0, 1].
Eigen::MatrixXd gram_matrix(std::span<const RawFunction> raw, int panels);

// Symmetric G^{-1/2} via eigendecomposition.
Eigen::MatrixXd inverse_sqrt_spd(const Eigen::MatrixXd& G,
                                 double max_condition = 1e12);

BasisSet basis_from_descriptor(std::string_view json);

}  // namespace anie
