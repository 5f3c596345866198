#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "anie/affinity.hpp"
#include "anie/basis.hpp"
#include "anie/events.hpp"
#include "anie/subspace.hpp"

namespace anie {

struct NodePair {
  NodeId u = 0;
  NodeId v = 0;
  friend bool operator==(const NodePair&, const NodePair&) = default;
};

// Thresholded reconstruction U (sum_b S_thresh[b] phi^b(t)) U^T.
class IntensityModel {
 public:
  // Throws ShapeError when the pieces disagree on D, N or B.
  IntensityModel(SubspaceEstimate sub, AffinityResult affinity, BasisSet basis);

  const SubspaceEstimate& subspace() const noexcept { return sub_; }
  const AffinityResult& affinity() const noexcept { return affinity_; }
  const BasisSet& basis() const noexcept { return basis_; }
  NodeId n_nodes() const noexcept { return static_cast<NodeId>(sub_.U_hat.rows()); }
  int rank() const noexcept { return static_cast<int>(sub_.U_hat.cols()); }

  // S(t) = sum_b S_thresh[b] phi^b(t). DomainError outside [0, 1].
  Eigen::MatrixXd affinity_density(double t) const;

  // Negative values are returned as-is unless clamp is set.
  double intensity_at(NodeId u, NodeId v, double t, bool clamp = false) const;

  // values(i, j) = intensity of pairs[i] at grid[j].
  Eigen::MatrixXd evaluate_grid(std::span<const NodePair> pairs,
                                std::span<const double> grid,
                                bool clamp = false) const;

 private:
  SubspaceEstimate sub_;
  AffinityResult affinity_;
  BasisSet basis_;
};

// Fills out[i] with the intensity of pairs[i] at time t.
using PairEvaluator =
    std::function<void(double t, std::span<const NodePair> pairs, std::span<double> out)>;

PairEvaluator evaluator(const IntensityModel& model, bool clamp = false);

// Evaluator for any estimate of the form U core(t) U^T.
PairEvaluator low_rank_evaluator(Eigen::MatrixXd U,
                                 std::function<Eigen::MatrixXd(double)> core);

// Mean over pairs of the midpoint-rule integral of (truth - estimate)^2 on
// quad_points uniform cells. ParameterError for an empty patch.
double mise(const PairEvaluator& truth, const PairEvaluator& estimate,
            std::span<const NodePair> pairs, int quad_points = 1 << 12);

// All ordered pairs of the first min(patch, N) nodes.
std::vector<NodePair> pair_patch(NodeId n_nodes, NodeId patch = 100);

// ||U_hat Q - U_true||_2 with the Procrustes rotation Q.
double subspace_error(const Eigen::MatrixXd& U_hat, const Eigen::MatrixXd& U_true);

}  // namespace anie
