#include "anie/affinity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "anie/error.hpp"
#include "json.hpp"

namespace anie {

AffinityResult affinity_coeffs(const CoeffSet& coeffs, const SubspaceEstimate& sub) {
  const Eigen::MatrixXd& U = sub.U_hat;
  if (U.rows() != coeffs.n_nodes()) {
    throw ShapeError("subspace has " + std::to_string(U.rows()) + " rows but the coefficients " +
                     std::to_string(coeffs.n_nodes()) + " nodes");
  }
  const auto D = U.cols();
  const Eigen::MatrixXd U2 = U.cwiseAbs2();

  AffinityResult r;
  r.rank = static_cast<int>(D);
  r.basis_size = coeffs.basis_size();
  r.S_hat.reserve(static_cast<std::size_t>(r.basis_size));
  r.var_hat.reserve(static_cast<std::size_t>(r.basis_size));
  for (int b = 0; b < coeffs.basis_size(); ++b) {
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(D, D);
    Eigen::MatrixXd V = Eigen::MatrixXd::Zero(D, D);
    for (const auto& e : coeffs.entries(b)) {
      S.noalias() += e.value * U.row(e.u).transpose() * U.row(e.v);
      V.noalias() += e.sq * U2.row(e.u).transpose() * U2.row(e.v);
    }
    r.S_hat.push_back(std::move(S));
    r.var_hat.push_back(std::move(V));
  }
  return r;
}

void compute_z_scores(AffinityResult& result) {
  const auto D = static_cast<Eigen::Index>(result.rank);
  result.z.assign(result.S_hat.size(), Eigen::MatrixXd::Zero(D, D));
  result.testable.assign(result.S_hat.size(), Eigen::MatrixXi::Zero(D, D));
  for (std::size_t b = 0; b < result.S_hat.size(); ++b) {
    for (Eigen::Index p = 0; p < D; ++p) {
      for (Eigen::Index q = 0; q < D; ++q) {
        const double var = result.var_hat[b](p, q);
        if (var > 0.0) {
          result.z[b](p, q) = result.S_hat[b](p, q) / std::sqrt(var);
          result.testable[b](p, q) = 1;
        }
      }
    }
  }
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / M_SQRT2); }

double two_sided_p(double z) { return std::min(1.0, std::erfc(std::abs(z) / M_SQRT2)); }

namespace {

// Rejections for alpha in [0, 1]; alpha = 0 rejects nothing.
BhOutcome step_up(std::span<const double> p, double alpha) {
  const std::size_t m = p.size();
  BhOutcome out{std::vector<bool>(m, false), std::vector<double>(m, 1.0)};
  if (m == 0) return out;
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });

  std::size_t k_max = 0;
  if (alpha > 0.0) {
    for (std::size_t k = m; k >= 1; --k) {
      if (p[order[k - 1]] <= static_cast<double>(k) * alpha / static_cast<double>(m)) {
        k_max = k;
        break;
      }
    }
  }
  for (std::size_t k = 0; k < k_max; ++k) out.rejected[order[k]] = true;

  double running = 1.0;
  for (std::size_t k = m; k >= 1; --k) {
    const double scaled = static_cast<double>(m) * p[order[k - 1]] / static_cast<double>(k);
    running = std::min(running, std::min(1.0, scaled));
    out.adjusted[order[k - 1]] = std::max(running, p[order[k - 1]]);
  }
  return out;
}

void apply_threshold(AffinityResult& result, double alpha, const TestScope& scope) {
  if (result.z.size() != result.S_hat.size()) compute_z_scores(result);
  if (scope.tested.size() != result.S_hat.size()) {
    throw ShapeError("test scope covers " + std::to_string(scope.tested.size()) +
                     " basis functions, expected " + std::to_string(result.S_hat.size()));
  }
  const auto D = static_cast<Eigen::Index>(result.rank);
  const std::size_t B = result.S_hat.size();
  result.alpha = alpha;
  result.tested = scope.tested;
  result.p_raw.assign(B, Eigen::MatrixXd::Ones(D, D));
  result.p_adj.assign(B, Eigen::MatrixXd::Ones(D, D));
  result.mask.assign(B, Eigen::MatrixXi::Zero(D, D));

  struct Slot {
    std::size_t b;
    Eigen::Index p;
    Eigen::Index q;
  };
  std::vector<Slot> family;
  std::vector<double> p_values;
  for (std::size_t b = 0; b < B; ++b) {
    for (Eigen::Index p = 0; p < D; ++p) {
      for (Eigen::Index q = 0; q < D; ++q) {
        if (result.testable[b](p, q)) {
          result.p_raw[b](p, q) = two_sided_p(result.z[b](p, q));
        }
        if (!scope.tested[b]) {
          result.p_adj[b](p, q) = result.p_raw[b](p, q);
          result.mask[b](p, q) = 1;
        } else if (result.testable[b](p, q)) {
          family.push_back({b, p, q});
          p_values.push_back(result.p_raw[b](p, q));
        }
      }
    }
  }

  const BhOutcome bh = step_up(p_values, alpha);
  for (std::size_t i = 0; i < family.size(); ++i) {
    const auto& s = family[i];
    result.p_adj[s.b](s.p, s.q) = bh.adjusted[i];
    result.mask[s.b](s.p, s.q) = bh.rejected[i] ? 1 : 0;
  }

  result.S_thresh.clear();
  for (std::size_t b = 0; b < B; ++b) {
    result.S_thresh.push_back(result.S_hat[b].cwiseProduct(result.mask[b].cast<double>()));
  }
}

}  // namespace

BhOutcome benjamini_hochberg(std::span<const double> p_values, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ParameterError("alpha must be in (0, 1]");
  return step_up(p_values, alpha);
}

TestScope scope_scaling_exclusion(const BasisSet& basis, bool exempt_first_generic) {
  TestScope scope{std::vector<bool>(static_cast<std::size_t>(basis.size()), true)};
  if (!scope.tested.empty() && (basis.is_haar() || exempt_first_generic)) {
    scope.tested[0] = false;
  }
  return scope;
}

void bh_threshold(AffinityResult& result, double alpha, const TestScope& scope) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ParameterError("alpha must be in (0, 1]");
  apply_threshold(result, alpha, scope);
}

void threshold(AffinityResult& result, double alpha, const TestScope& scope) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ParameterError("alpha must be in [0, 1]");
  apply_threshold(result, alpha, scope);
}

AffinityResult estimate_affinity(const CoeffSet& coeffs, const SubspaceEstimate& sub,
                                 const BasisSet& basis, double alpha) {
  if (coeffs.basis_size() != basis.size()) {
    throw ShapeError("coefficients were computed for a different basis size");
  }
  AffinityResult r = affinity_coeffs(coeffs, sub);
  compute_z_scores(r);
  threshold(r, alpha, scope_scaling_exclusion(basis));
  return r;
}

namespace {

template <typename Matrix>
nlohmann::json flatten(const Matrix& M) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index p = 0; p < M.rows(); ++p) {
    for (Eigen::Index q = 0; q < M.cols(); ++q) out.push_back(M(p, q));
  }
  return out;
}

template <typename Matrix>
Matrix unflatten(const nlohmann::json& values, Eigen::Index D) {
  if (!values.is_array() || static_cast<Eigen::Index>(values.size()) != D * D) {
    throw ValidationError("affinity matrix has the wrong number of entries");
  }
  Matrix M(D, D);
  for (Eigen::Index p = 0; p < D; ++p) {
    for (Eigen::Index q = 0; q < D; ++q) {
      M(p, q) = values.at(static_cast<std::size_t>(p * D + q)).get<typename Matrix::Scalar>();
    }
  }
  return M;
}

}  // namespace

std::string affinity_to_json(const AffinityResult& r) {
  nlohmann::ordered_json doc;
  doc["rank"] = r.rank;
  doc["basis_size"] = r.basis_size;
  doc["alpha"] = r.alpha;
  doc["tested"] = r.tested;
  nlohmann::json list = nlohmann::json::array();
  for (std::size_t b = 0; b < r.S_hat.size(); ++b) {
    nlohmann::json c;
    c["b"] = b;
    c["S_hat"] = flatten(r.S_hat[b]);
    c["var_hat"] = flatten(r.var_hat[b]);
    if (b < r.z.size()) c["z"] = flatten(r.z[b]);
    if (b < r.p_raw.size()) {
      c["p_raw"] = flatten(r.p_raw[b]);
      c["p_adj"] = flatten(r.p_adj[b]);
      c["testable"] = flatten(r.testable[b]);
      c["mask"] = flatten(r.mask[b]);
      c["S_thresh"] = flatten(r.S_thresh[b]);
    }
    list.push_back(std::move(c));
  }
  doc["coefficients"] = std::move(list);
  return doc.dump();
}

AffinityResult affinity_from_json(std::string_view json) {
  try {
    const auto doc = nlohmann::json::parse(json);
    AffinityResult r;
    r.rank = doc.at("rank").get<int>();
    r.basis_size = doc.at("basis_size").get<int>();
    r.alpha = doc.at("alpha").get<double>();
    r.tested = doc.at("tested").get<std::vector<bool>>();
    const Eigen::Index D = r.rank;
    for (const auto& c : doc.at("coefficients")) {
      r.S_hat.push_back(unflatten<Eigen::MatrixXd>(c.at("S_hat"), D));
      r.var_hat.push_back(unflatten<Eigen::MatrixXd>(c.at("var_hat"), D));
      r.z.push_back(unflatten<Eigen::MatrixXd>(c.at("z"), D));
      r.p_raw.push_back(unflatten<Eigen::MatrixXd>(c.at("p_raw"), D));
      r.p_adj.push_back(unflatten<Eigen::MatrixXd>(c.at("p_adj"), D));
      r.testable.push_back(unflatten<Eigen::MatrixXi>(c.at("testable"), D));
      r.mask.push_back(unflatten<Eigen::MatrixXi>(c.at("mask"), D));
      r.S_thresh.push_back(unflatten<Eigen::MatrixXd>(c.at("S_thresh"), D));
    }
    if (static_cast<int>(r.S_hat.size()) != r.basis_size) {
      throw ValidationError("affinity document lists the wrong number of basis functions");
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("affinity document: ") + e.what());
  }
}

}  // namespace anie
