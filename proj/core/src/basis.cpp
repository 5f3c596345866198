#include "anie/basis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "anie/error.hpp"
#include "anie/io.hpp"
#include "json.hpp"

namespace anie {

namespace {

void check_domain(double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw DomainError("basis evaluated outside [0, 1] at t = " + format_double(t));
  }
}

}  // namespace

RawFunction::RawFunction(std::function<double(double)> fn) : fn_(std::move(fn)) {
  if (!fn_) throw ParameterError("raw function evaluator is empty");
}

RawFunction::RawFunction(std::vector<double> grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (grid_.size() < 2 || grid_.size() != values_.size()) {
    throw ParameterError("sampled function needs matching grid/values with >= 2 points");
  }
  if (!std::is_sorted(grid_.begin(), grid_.end()) ||
      std::adjacent_find(grid_.begin(), grid_.end()) != grid_.end()) {
    throw ParameterError("sample grid must be strictly increasing");
  }
  if (grid_.front() > 0.0 || grid_.back() < 1.0) {
    throw ParameterError("sample grid must cover [0, 1]");
  }
}

double RawFunction::operator()(double t) const {
  if (fn_) return fn_(t);
  auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
  if (it == grid_.begin()) return values_.front();
  if (it == grid_.end()) return values_.back();
  const auto i = static_cast<std::size_t>(it - grid_.begin());
  const double w = (t - grid_[i - 1]) / (grid_[i] - grid_[i - 1]);
  return (1.0 - w) * values_[i - 1] + w * values_[i];
}

double haar_height(int j) {
  const double base = std::ldexp(1.0, j / 2);
  return (j % 2 == 0) ? base : base * M_SQRT2;
}

std::int64_t haar_fine_cell(int j, double t) {
  const std::int64_t cells = std::int64_t{1} << (j + 1);
  const auto m = static_cast<std::int64_t>(std::floor(std::ldexp(t, j + 1)));
  return std::clamp<std::int64_t>(m, 0, cells - 1);
}

BasisSet haar_basis(int J) {
  if (J < 0 || J > 30) throw ParameterError("Haar level J must be in [0, 30]");
  BasisSet set;
  set.haar_ = true;
  set.max_level_ = J;
  const std::int64_t B = std::int64_t{1} << J;
  set.functions_.reserve(static_cast<std::size_t>(B));
  set.functions_.push_back({0, BasisKind::haar_scaling, 0, 0, 0.0, 1.0});
  for (int j = 0; j < J; ++j) {
    const double width = std::ldexp(1.0, -j);
    for (std::int64_t k = 0; k < (std::int64_t{1} << j); ++k) {
      set.functions_.push_back({haar_index(j, k), BasisKind::haar_detail, j, k,
                                width * static_cast<double>(k),
                                width * static_cast<double>(k + 1)});
    }
  }
  return set;
}

double BasisSet::eval(int b, double t) const {
  check_domain(t);
  const auto& f = functions_.at(b);
  switch (f.kind) {
    case BasisKind::haar_scaling:
      return 1.0;
    case BasisKind::haar_detail: {
      const std::int64_t m = haar_fine_cell(f.level, t);
      if ((m >> 1) != f.location) return 0.0;
      const double h = haar_height(f.level);
      return (m & 1) == 0 ? h : -h;
    }
    case BasisKind::generic: {
      double acc = 0.0;
      for (std::size_t l = 0; l < raw_.size(); ++l) {
        acc += mixing_(b, static_cast<Eigen::Index>(l)) * raw_[l](t);
      }
      return acc;
    }
  }
  return 0.0;
}

double BasisSet::eval_squared(int b, double t) const {
  const double x = eval(b, t);
  return x * x;
}

std::string BasisSet::descriptor() const {
  nlohmann::ordered_json d;
  if (haar_) {
    d["kind"] = "haar";
    d["J"] = max_level_;
    return d.dump();
  }
  // Generic families are described by their raw functions on a common grid
  // together with the mixing matrix that orthonormalizes them.
  d["kind"] = "custom";
  std::vector<double> grid;
  for (const auto& r : raw_) {
    if (!r.is_sampled()) {
      grid.clear();
      break;
    }
    if (grid.empty()) grid = r.grid();
  }
  d["grid"] = grid;
  nlohmann::json values = nlohmann::json::array();
  for (const auto& r : raw_) values.push_back(r.is_sampled() ? r.values() : std::vector<double>{});
  d["values"] = values;
  nlohmann::json mix = nlohmann::json::array();
  for (Eigen::Index i = 0; i < mixing_.rows(); ++i) {
    std::vector<double> row;
    for (Eigen::Index l = 0; l < mixing_.cols(); ++l) row.push_back(mixing_(i, l));
    mix.push_back(row);
  }
  d["mixing"] = mix;
  return d.dump();
}

std::uint64_t BasisSet::descriptor_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : descriptor()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Eigen::MatrixXd gram_matrix(std::span<const RawFunction> raw, int panels) {
  if (panels < 1) throw ParameterError("quadrature needs at least one panel");
  const auto n = static_cast<Eigen::Index>(raw.size());
  Eigen::MatrixXd samples(panels, n);
  for (int i = 0; i < panels; ++i) {
    const double t = (i + 0.5) / panels;
    for (Eigen::Index l = 0; l < n; ++l) samples(i, l) = raw[static_cast<std::size_t>(l)](t);
  }
  Eigen::MatrixXd G = samples.transpose() * samples / static_cast<double>(panels);
  return 0.5 * (G + G.transpose());
}

Eigen::MatrixXd inverse_sqrt_spd(const Eigen::MatrixXd& G, double max_condition) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
  if (eig.info() != Eigen::Success) throw NumericError("Gram eigendecomposition failed");
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double lo = lambda.minCoeff();
  const double hi = lambda.maxCoeff();
  if (!(lo > 0.0) || hi / lo > max_condition) {
    throw IllConditionedBasisError(
        "ill-conditioned basis: smallest Gram eigenvalue " + format_double(lo), lo);
  }
  const Eigen::VectorXd inv_sqrt = lambda.array().rsqrt();
  return eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
}

BasisSet orthonormalize(std::vector<RawFunction> raw, const OrthonormalizeOptions& options) {
  if (raw.empty()) throw ParameterError("cannot orthonormalize an empty family");
  const Eigen::MatrixXd G = gram_matrix(raw, options.quadrature_panels);
  BasisSet set;
  set.mixing_ = inverse_sqrt_spd(G, options.max_condition);
  set.raw_ = std::move(raw);
  for (int b = 0; b < static_cast<int>(set.raw_.size()); ++b) {
    set.functions_.push_back({b, BasisKind::generic, 0, 0, 0.0, 1.0});
  }
  return set;
}

BasisSet basis_from_descriptor(std::string_view json) {
  nlohmann::json d;
  try {
    d = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("basis descriptor: ") + e.what());
  }
  try {
    const auto kind = d.at("kind").get<std::string>();
    if (kind == "haar") return haar_basis(d.at("J").get<int>());
    if (kind != "custom") throw ParameterError("unknown basis kind '" + kind + "'");
    const auto grid = d.at("grid").get<std::vector<double>>();
    const auto values = d.at("values").get<std::vector<std::vector<double>>>();
    std::vector<RawFunction> raw;
    raw.reserve(values.size());
    for (const auto& v : values) raw.emplace_back(grid, v);
    return orthonormalize(std::move(raw));
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("basis descriptor: ") + e.what());
  }
}

}  // namespace anie
