#include "anie/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "anie/error.hpp"
#include "anie/io.hpp"
#include "anie/synth.hpp"

namespace anie {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// X X^T Q and X^T Q for the concatenated coefficient matrix, read straight
// from the per-basis entry lists.
struct CoeffOperator {
  const CoeffSet& coeffs;

  Eigen::Index rows() const { return coeffs.n_nodes(); }
  Eigen::Index cols() const {
    return static_cast<Eigen::Index>(coeffs.n_nodes()) * coeffs.basis_size();
  }

  RowMatrix transpose_times(const RowMatrix& Q) const {
    const Eigen::Index n = coeffs.n_nodes();
    RowMatrix out = RowMatrix::Zero(cols(), Q.cols());
    for (int b = 0; b < coeffs.basis_size(); ++b) {
      const Eigen::Index base = b * n;
      for (const auto& e : coeffs.entries(b)) out.row(base + e.u) += e.value * Q.row(e.v);
    }
    return out;
  }

  RowMatrix times(const RowMatrix& W) const {
    const Eigen::Index n = coeffs.n_nodes();
    RowMatrix out = RowMatrix::Zero(rows(), W.cols());
    for (int b = 0; b < coeffs.basis_size(); ++b) {
      const Eigen::Index base = b * n;
      for (const auto& e : coeffs.entries(b)) out.row(e.v) += e.value * W.row(base + e.u);
    }
    return out;
  }
};

template <typename Matrix>
struct MatrixOperator {
  const Matrix& X;

  Eigen::Index rows() const { return X.rows(); }
  Eigen::Index cols() const { return X.cols(); }
  RowMatrix transpose_times(const RowMatrix& Q) const { return RowMatrix(X.transpose() * Q); }
  RowMatrix times(const RowMatrix& W) const { return RowMatrix(X * W); }
};

// Flip each column so that its largest-magnitude entry is positive.
void canonical_signs(Eigen::MatrixXd& U) {
  for (Eigen::Index c = 0; c < U.cols(); ++c) {
    Eigen::Index idx = 0;
    U.col(c).cwiseAbs().maxCoeff(&idx);
    if (U(idx, c) < 0.0) U.col(c) *= -1.0;
  }
}

template <typename Op>
SubspaceEstimate block_subspace_svd(const Op& op, const SvdOptions& options) {
  const Eigen::Index n = op.rows();
  const int D = options.rank;
  if (D < 1) throw ParameterError("rank D must be at least 1");
  if (D > n) {
    throw ParameterError("rank D = " + std::to_string(D) + " exceeds N = " + std::to_string(n));
  }
  const int wanted = std::max(D, options.scree_count);
  const auto k = static_cast<Eigen::Index>(
      std::min<std::int64_t>(n, static_cast<std::int64_t>(wanted) + options.oversampling));

  SplitMix64 rng(derive_seed(options.seed, 0x5356445ULL));
  std::normal_distribution<double> normal;
  RowMatrix start(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < k; ++c) start(i, c) = normal(rng);
  }

  // Restarted block Krylov iteration on X X^T. Basis holds an orthonormal
  // Krylov basis, image = X X^T basis (computed, never recurred), and the
  // Rayleigh-Ritz step runs over the whole basis. When the basis reaches
  // max_dim it is compressed to the leading k Ritz vectors.
  const Eigen::Index max_dim = std::min<Eigen::Index>(n, std::max<Eigen::Index>(3 * k, k + 60));
  Eigen::MatrixXd basis(n, 0);
  Eigen::MatrixXd image(n, 0);
  Eigen::MatrixXd block = Eigen::MatrixXd(start);

  // Orthogonalizes block against basis (twice) and within itself, dropping
  // directions already contained in the span.
  const auto extend = [&](Eigen::MatrixXd cand) {
    std::vector<Eigen::VectorXd> kept;
    for (Eigen::Index c = 0; c < cand.cols(); ++c) {
      Eigen::VectorXd x = cand.col(c);
      const double before = x.norm();
      if (!(before > 0.0)) continue;
      for (int pass = 0; pass < 2; ++pass) {
        if (basis.cols() > 0) x -= basis * (basis.transpose() * x);
        for (const auto& y : kept) x -= y.dot(x) * y;
      }
      const double after = x.norm();
      if (after > 1e-10 * before) kept.push_back(x / after);
    }
    Eigen::MatrixXd out(n, static_cast<Eigen::Index>(kept.size()));
    for (std::size_t c = 0; c < kept.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = kept[c];
    return out;
  };

  SubspaceEstimate est;
  est.rank = D;
  bool converged = false;
  RowMatrix Q;
  for (int it = 1; it <= options.max_iterations; ++it) {
    const Eigen::MatrixXd fresh = extend(std::move(block));
    if (fresh.cols() > 0) {
      const RowMatrix fresh_rows = fresh;
      const Eigen::MatrixXd fresh_image = Eigen::MatrixXd(op.times(op.transpose_times(fresh_rows)));
      basis.conservativeResize(Eigen::NoChange, basis.cols() + fresh.cols());
      basis.rightCols(fresh.cols()) = fresh;
      image.conservativeResize(Eigen::NoChange, image.cols() + fresh.cols());
      image.rightCols(fresh.cols()) = fresh_image;
    }
    const Eigen::MatrixXd H = basis.transpose() * image;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (H + H.transpose()));
    if (eig.info() != Eigen::Success) throw NumericError("Rayleigh-Ritz eigensolver failed");
    // Eigen sorts ascending; the largest Ritz values sit at the end.
    const Eigen::VectorXd theta = eig.eigenvalues().reverse();
    const Eigen::MatrixXd V = eig.eigenvectors().rowwise().reverse();
    const Eigen::Index kk = std::min<Eigen::Index>(k, V.cols());
    const double top = theta.size() > 0 ? theta(0) : 0.0;
    est.iterations = it;

    const bool exhausted = fresh.cols() == 0 || basis.cols() == n;
    double residual = 0.0;
    if (top > 0.0) {
      const Eigen::MatrixXd Vd = V.leftCols(std::min<Eigen::Index>(D, V.cols()));
      const Eigen::MatrixXd R = image * Vd - basis * Vd * theta.head(Vd.cols()).asDiagonal();
      residual = R.colwise().norm().maxCoeff() / top;
    }
    est.residual = residual;
    if (!(top > 0.0) || residual <= options.tolerance || exhausted) {
      Q = basis * V.leftCols(kk);
      converged = true;
      break;
    }

    block = image.rightCols(fresh.cols());
    if (basis.cols() + block.cols() > max_dim) {
      // Thick restart: keep the leading Ritz vectors and their images.
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis * V.leftCols(kk));
      const Eigen::MatrixXd Qr = qr.householderQ() * Eigen::MatrixXd::Identity(n, kk);
      const Eigen::MatrixXd Rr = qr.matrixQR().topRows(kk).template triangularView<Eigen::Upper>();
      const Eigen::MatrixXd img = image * V.leftCols(kk);
      image = Rr.transpose().triangularView<Eigen::Lower>().solve(img.transpose()).transpose();
      basis = Qr;
      block = image - basis * (basis.transpose() * image);
    }
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "truncated SVD did not converge after " << est.iterations
        << " iterations (residual " << est.residual << ", tolerance " << options.tolerance << ")";
    throw NumericError(msg.str());
  }
  // Final extraction through a small SVD of Q^T X, avoiding squared
  // singular values: X^T Q = Q2 R, R = A S B^T  =>  U = Q B.
  const RowMatrix W = op.transpose_times(Q);
  Eigen::MatrixXd R;
  if (W.rows() >= W.cols()) {
    const Eigen::MatrixXd dense = W;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(dense);
    R = qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
  } else {
    R = Eigen::MatrixXd(W);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd sigma = svd.singularValues();
  Eigen::MatrixXd U = Eigen::MatrixXd(Q) * svd.matrixV().leftCols(D);
  // Re-orthonormalize against round-off from the product.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(U);
  Eigen::MatrixXd Uq = qr.householderQ() * Eigen::MatrixXd::Identity(n, D);
  for (Eigen::Index c = 0; c < D; ++c) {
    if (Uq.col(c).dot(U.col(c)) < 0.0) Uq.col(c) *= -1.0;
  }
  est.U_hat = std::move(Uq);
  canonical_signs(est.U_hat);

  const double sigma1 = sigma.size() > 0 ? sigma(0) : 0.0;
  const auto keep = static_cast<Eigen::Index>(
      std::min<std::int64_t>(sigma.size(), std::max(D, options.scree_count)));
  for (Eigen::Index i = 0; i < keep; ++i) {
    double s = sigma(i);
    if (!(s > 1e-12 * sigma1)) {
      s = 0.0;
      if (i < D) ++est.deficient;
    }
    est.singular_values.push_back(s);
  }
  while (static_cast<int>(est.singular_values.size()) < D) {
    est.singular_values.push_back(0.0);
    ++est.deficient;
  }
  return est;
}

}  // namespace

SparseMatrix build_X(const CoeffSet& coeffs) {
  const std::int64_t n = coeffs.n_nodes();
  SparseMatrix X(n, n * coeffs.basis_size());
  std::vector<Eigen::Triplet<double, std::int64_t>> triplets;
  triplets.reserve(coeffs.total_entries());
  for (int b = 0; b < coeffs.basis_size(); ++b) {
    for (const auto& e : coeffs.entries(b)) triplets.emplace_back(e.v, b * n + e.u, e.value);
  }
  X.setFromTriplets(triplets.begin(), triplets.end());
  return X;
}

SubspaceEstimate truncated_svd(const SparseMatrix& X, const SvdOptions& options) {
  return block_subspace_svd(MatrixOperator<SparseMatrix>{X}, options);
}

SubspaceEstimate truncated_svd(const Eigen::MatrixXd& X, const SvdOptions& options) {
  return block_subspace_svd(MatrixOperator<Eigen::MatrixXd>{X}, options);
}

SubspaceEstimate truncated_svd(const CoeffSet& coeffs, const SvdOptions& options) {
  return block_subspace_svd(CoeffOperator{coeffs}, options);
}

std::vector<std::pair<int, double>> scree(const SubspaceEstimate& est) {
  std::vector<std::pair<int, double>> out;
  for (std::size_t i = 0; i < est.singular_values.size(); ++i) {
    out.emplace_back(static_cast<int>(i + 1), est.singular_values[i]);
  }
  return out;
}

Eigen::MatrixXd procrustes_rotation(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  if (A.rows() != B.rows() || A.cols() != B.cols()) {
    throw ShapeError("procrustes: shapes differ");
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A.transpose() * B,
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

double projector_distance(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  if (A.rows() != B.rows()) throw ShapeError("projector distance: row counts differ");
  const Eigen::MatrixXd diff = A * A.transpose() - B * B.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(diff, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

void save_scree_csv(const SubspaceEstimate& est, const std::filesystem::path& path) {
  std::string out = "index,sigma\n";
  for (const auto& [i, s] : scree(est)) out += std::to_string(i) + "," + format_double(s) + "\n";
  write_file_atomic(path, out);
}

void save_subspace_csv(const SubspaceEstimate& est, const std::filesystem::path& path) {
  std::string out;
  for (Eigen::Index i = 0; i < est.U_hat.rows(); ++i) {
    for (Eigen::Index c = 0; c < est.U_hat.cols(); ++c) {
      if (c > 0) out += ',';
      out += format_double(est.U_hat(i, c));
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

Eigen::MatrixXd load_matrix_csv(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(field, &used));
      } catch (const std::exception&) {
        throw ParseError("bad number in " + path.string() + " line " + std::to_string(line_no),
                         line_no);
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError("ragged matrix in " + path.string(), line_no);
    }
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size()),
                    rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < rows[i].size(); ++c) {
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
    }
  }
  return M;
}

}  // namespace anie
