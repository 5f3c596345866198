#include "anie/model.hpp"

#include <algorithm>
#include <memory>

#include <Eigen/SVD>

#include "anie/error.hpp"
#include "anie/io.hpp"

namespace anie {

IntensityModel::IntensityModel(SubspaceEstimate sub, AffinityResult affinity, BasisSet basis)
    : sub_(std::move(sub)), affinity_(std::move(affinity)), basis_(std::move(basis)) {
  if (sub_.U_hat.cols() != affinity_.rank) {
    throw ShapeError("subspace rank " + std::to_string(sub_.U_hat.cols()) +
                     " does not match affinity rank " + std::to_string(affinity_.rank));
  }
  if (affinity_.basis_size != basis_.size() ||
      static_cast<int>(affinity_.S_thresh.size()) != basis_.size()) {
    throw ShapeError("thresholded coefficients do not match the basis size");
  }
  for (const auto& S : affinity_.S_thresh) {
    if (S.rows() != affinity_.rank || S.cols() != affinity_.rank) {
      throw ShapeError("thresholded coefficient matrix has the wrong shape");
    }
  }
}

Eigen::MatrixXd IntensityModel::affinity_density(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("t = " + format_double(t) + " outside [0, 1]");
  const auto& S = affinity_.S_thresh;
  if (basis_.is_haar()) {
    Eigen::MatrixXd out = S[0];
    for (int j = 0; j < basis_.max_level(); ++j) {
      const std::int64_t m = haar_fine_cell(j, t);
      const double h = (m & 1) == 0 ? haar_height(j) : -haar_height(j);
      out += h * S[static_cast<std::size_t>(haar_index(j, m >> 1))];
    }
    return out;
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rank(), rank());
  for (int b = 0; b < basis_.size(); ++b) out += basis_.eval(b, t) * S[static_cast<std::size_t>(b)];
  return out;
}

double IntensityModel::intensity_at(NodeId u, NodeId v, double t, bool clamp) const {
  if (u < 0 || v < 0 || u >= n_nodes() || v >= n_nodes()) {
    throw ParameterError("node index out of range");
  }
  const Eigen::MatrixXd S = affinity_density(t);
  const double value = sub_.U_hat.row(u) * S * sub_.U_hat.row(v).transpose();
  return clamp ? std::max(value, 0.0) : value;
}

Eigen::MatrixXd IntensityModel::evaluate_grid(std::span<const NodePair> pairs,
                                              std::span<const double> grid, bool clamp) const {
  for (const auto& p : pairs) {
    if (p.u < 0 || p.v < 0 || p.u >= n_nodes() || p.v >= n_nodes()) {
      throw ParameterError("node index out of range");
    }
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(pairs.size()), static_cast<Eigen::Index>(grid.size()));
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const Eigen::MatrixXd S = affinity_density(grid[j]);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const double value = sub_.U_hat.row(pairs[i].u) * S * sub_.U_hat.row(pairs[i].v).transpose();
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          clamp ? std::max(value, 0.0) : value;
    }
  }
  return out;
}

PairEvaluator evaluator(const IntensityModel& model, bool clamp) {
  auto shared = std::make_shared<const IntensityModel>(model);
  return [shared, clamp](double t, std::span<const NodePair> pairs, std::span<double> out) {
    const Eigen::MatrixXd S = shared->affinity_density(t);
    const Eigen::MatrixXd& U = shared->subspace().U_hat;
    const Eigen::MatrixXd US = U * S;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const double value = US.row(pairs[i].u).dot(U.row(pairs[i].v));
      out[i] = clamp ? std::max(value, 0.0) : value;
    }
  };
}

PairEvaluator low_rank_evaluator(Eigen::MatrixXd U, std::function<Eigen::MatrixXd(double)> core) {
  auto shared = std::make_shared<const Eigen::MatrixXd>(std::move(U));
  return [shared, core = std::move(core)](double t, std::span<const NodePair> pairs,
                                          std::span<double> out) {
    const Eigen::MatrixXd US = *shared * core(t);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      out[i] = US.row(pairs[i].u).dot(shared->row(pairs[i].v));
    }
  };
}

double mise(const PairEvaluator& truth, const PairEvaluator& estimate,
            std::span<const NodePair> pairs, int quad_points) {
  if (pairs.empty()) throw ParameterError("MISE needs a non-empty pair patch");
  if (quad_points < 1) throw ParameterError("MISE needs at least one quadrature point");
  std::vector<double> a(pairs.size());
  std::vector<double> b(pairs.size());
  double total = 0.0;
  for (int i = 0; i < quad_points; ++i) {
    const double t = (i + 0.5) / quad_points;
    truth(t, pairs, a);
    estimate(t, pairs, b);
    double step = 0.0;
    for (std::size_t k = 0; k < pairs.size(); ++k) step += (a[k] - b[k]) * (a[k] - b[k]);
    total += step;
  }
  return total / (static_cast<double>(quad_points) * static_cast<double>(pairs.size()));
}

std::vector<NodePair> pair_patch(NodeId n_nodes, NodeId patch) {
  const NodeId n = std::min(n_nodes, patch);
  std::vector<NodePair> out;
  out.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = 0; v < n; ++v) out.push_back({u, v});
  }
  return out;
}

double subspace_error(const Eigen::MatrixXd& U_hat, const Eigen::MatrixXd& U_true) {
  if (U_hat.rows() != U_true.rows() || U_hat.cols() != U_true.cols()) {
    throw ShapeError("subspace error: shapes differ");
  }
  const Eigen::MatrixXd Q = procrustes_rotation(U_hat, U_true);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(U_hat * Q - U_true);
  return svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
}

}  // namespace anie
