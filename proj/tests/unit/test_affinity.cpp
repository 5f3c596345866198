#include <algorithm>
#include <cmath>
#include <random>

#include <boost/math/distributions/normal.hpp>

#include "doctest.h"
#include "oracles.hpp"

#include "anie/affinity.hpp"
#include "anie/error.hpp"

using namespace anie;

namespace {

CoeffSet random_sparse_coeffs(NodeId n, int basis, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> g;
  std::vector<std::vector<CoeffEntry>> per(basis);
  for (int b = 0; b < basis; ++b) {
    for (NodeId u = 0; u < n; ++u) {
      for (NodeId v = 0; v < n; ++v) {
        if (unit(rng) >= density) continue;
        const double x = g(rng);
        per[b].push_back({u, v, x, x * x + unit(rng)});
      }
    }
  }
  return CoeffSet(n, 0, std::move(per));
}

SubspaceEstimate random_subspace(NodeId n, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd A(n, d);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = g(rng);
  SubspaceEstimate est;
  est.U_hat = Eigen::HouseholderQR<Eigen::MatrixXd>(A).householderQ() *
              Eigen::MatrixXd::Identity(n, d);
  est.rank = d;
  est.singular_values.assign(static_cast<std::size_t>(d), 1.0);
  return est;
}

SubspaceEstimate identity_subspace(NodeId n) {
  SubspaceEstimate est;
  est.U_hat = Eigen::MatrixXd::Identity(n, n);
  est.rank = n;
  est.singular_values.assign(static_cast<std::size_t>(n), 1.0);
  return est;
}

AffinityResult single_entry(double s, double var) {
  AffinityResult r;
  r.rank = 1;
  r.basis_size = 1;
  r.S_hat = {Eigen::MatrixXd::Constant(1, 1, s)};
  r.var_hat = {Eigen::MatrixXd::Constant(1, 1, var)};
  compute_z_scores(r);
  return r;
}

// Affinity result with prescribed p-values through z = Phi^{-1}(1 - p/2).
AffinityResult from_p_values(const std::vector<double>& p) {
  const boost::math::normal n01;
  AffinityResult r;
  r.rank = 1;
  r.basis_size = static_cast<int>(p.size());
  for (double pi : p) {
    const double z = boost::math::quantile(boost::math::complement(n01, pi / 2.0));
    r.S_hat.push_back(Eigen::MatrixXd::Constant(1, 1, z));
    r.var_hat.push_back(Eigen::MatrixXd::Constant(1, 1, 1.0));
  }
  compute_z_scores(r);
  return r;
}

TestScope everything(int basis) { return TestScope{std::vector<bool>(basis, true)}; }

}  // namespace

TEST_CASE("identity congruence returns the coefficient matrices") {
  const auto c = random_sparse_coeffs(4, 3, 0.5, 1);
  const auto r = affinity_coeffs(c, identity_subspace(4));
  for (int b = 0; b < 3; ++b) {
    CHECK((r.S_hat[b] - testing::dense_coeff(c, b)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((r.var_hat[b] - testing::dense_sq(c, b)).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("empty coefficients give zero affinity") {
  const CoeffSet c(3, 0, {{}, {}});
  const auto r = affinity_coeffs(c, random_subspace(3, 2, 2));
  for (int b = 0; b < 2; ++b) {
    CHECK(r.S_hat[b].isZero(0.0));
    CHECK(r.var_hat[b].isZero(0.0));
  }
}

TEST_CASE("sparse congruence matches the dense triple product") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const NodeId n = seed < 10 ? 3 : 17;
    const int d = seed < 10 ? 2 : 4;
    const auto c = random_sparse_coeffs(n, 2, 0.4, seed);
    const auto sub = random_subspace(n, d, seed + 50);
    const auto r = affinity_coeffs(c, sub);
    const Eigen::MatrixXd& U = sub.U_hat;
    const Eigen::MatrixXd U2 = U.cwiseAbs2();
    for (int b = 0; b < 2; ++b) {
      const Eigen::MatrixXd S = U.transpose() * testing::dense_coeff(c, b) * U;
      const Eigen::MatrixXd V = U2.transpose() * testing::dense_sq(c, b) * U2;
      CHECK((r.S_hat[b] - S).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((r.var_hat[b] - V).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(r.var_hat[b].minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("congruence is bilinear in the coefficients") {
  const auto A = random_sparse_coeffs(6, 2, 0.5, 7);
  const auto B = random_sparse_coeffs(6, 2, 0.5, 8);
  const double a = 1.5, b = -0.25;
  std::vector<std::vector<CoeffEntry>> mixed(2);
  for (int k = 0; k < 2; ++k) {
    const Eigen::MatrixXd M = a * testing::dense_coeff(A, k) + b * testing::dense_coeff(B, k);
    for (NodeId u = 0; u < 6; ++u) {
      for (NodeId v = 0; v < 6; ++v) {
        if (M(u, v) != 0.0) mixed[k].push_back({u, v, M(u, v), 0.0});
      }
    }
  }
  const CoeffSet C(6, 0, std::move(mixed));
  const auto sub = random_subspace(6, 3, 9);
  const auto ra = affinity_coeffs(A, sub);
  const auto rb = affinity_coeffs(B, sub);
  const auto rc = affinity_coeffs(C, sub);
  for (int k = 0; k < 2; ++k) {
    CHECK((rc.S_hat[k] - (a * ra.S_hat[k] + b * rb.S_hat[k])).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("shape mismatch") {
  const auto c = random_sparse_coeffs(4, 1, 0.5, 3);
  CHECK_THROWS_AS(affinity_coeffs(c, random_subspace(5, 2, 1)), ShapeError);
}

TEST_CASE("z-scores") {
  auto r = single_entry(2.0, 4.0);
  CHECK(r.z[0](0, 0) == 1.0);
  CHECK(r.testable[0](0, 0) == 1);
  r = single_entry(0.0, 7.0);
  CHECK(r.z[0](0, 0) == 0.0);
  CHECK(r.testable[0](0, 0) == 1);
  r = single_entry(0.5, 0.0);
  CHECK(r.z[0](0, 0) == 0.0);
  CHECK(r.testable[0](0, 0) == 0);
}

TEST_CASE("normal tail probabilities") {
  const boost::math::normal n01;
  for (double x : {-8.0, -3.5, -1.0, 0.0, 0.3, 2.0, 6.0}) {
    CHECK(std::abs(normal_cdf(x) - boost::math::cdf(n01, x)) < 1e-12);
  }
  for (double z : {0.0, 1.0, 1.96, 5.0, 10.0, 30.0}) {
    const double expected = 2.0 * boost::math::cdf(boost::math::complement(n01, z));
    CHECK(two_sided_p(z) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(two_sided_p(-z) == two_sided_p(z));
  }
  CHECK(two_sided_p(0.0) == 1.0);
  CHECK(two_sided_p(30.0) > 0.0);
}

TEST_CASE("Benjamini-Hochberg hand example") {
  const std::vector<double> p{0.001, 0.02, 0.04, 0.5};
  const auto out = benjamini_hochberg(p, 0.05);
  CHECK(out.rejected == std::vector<bool>{true, true, false, false});
  CHECK(out.adjusted[0] == doctest::Approx(0.004));
  CHECK(out.adjusted[1] == doctest::Approx(0.04));
  CHECK(out.adjusted[2] == doctest::Approx(0.04 * 4 / 3));
  CHECK(out.adjusted[3] == doctest::Approx(0.5));

  const std::vector<double> ones(5, 1.0);
  const auto none = benjamini_hochberg(ones, 0.05);
  CHECK(std::none_of(none.rejected.begin(), none.rejected.end(), [](bool x) { return x; }));

  const auto all = benjamini_hochberg(ones, 1.0);
  CHECK(std::all_of(all.rejected.begin(), all.rejected.end(), [](bool x) { return x; }));

  CHECK_THROWS_AS(benjamini_hochberg(p, 0.0), ParameterError);
  CHECK_THROWS_AS(benjamini_hochberg(p, 1.5), ParameterError);
  CHECK(benjamini_hochberg({}, 0.05).rejected.empty());
}

TEST_CASE("step-up agrees with the brute-force oracle") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> len(1, 20);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> coin(0, 3);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> p(static_cast<std::size_t>(len(rng)));
    for (auto& x : p) x = coin(rng) == 0 ? unit(rng) * 0.01 : unit(rng);
    if (trial % 7 == 0 && p.size() > 1) p[1] = p[0];
    const double alpha = trial % 3 == 0 ? 1.0 : 0.01 + 0.2 * unit(rng);
    const auto out = benjamini_hochberg(p, alpha);
    CHECK(out.rejected == testing::step_up_oracle(p, alpha));
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(out.adjusted[i] >= p[i]);
      CHECK(out.adjusted[i] <= 1.0);
      CHECK(out.rejected[i] == (out.adjusted[i] <= alpha));
    }
  }
}

TEST_CASE("rejections grow with alpha") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p(15);
    for (auto& x : p) x = std::pow(unit(rng), 3.0);
    double a1 = unit(rng), a2 = unit(rng);
    if (a1 > a2) std::swap(a1, a2);
    const auto r1 = benjamini_hochberg(p, std::max(a1, 1e-9));
    const auto r2 = benjamini_hochberg(p, std::max(a2, 1e-9));
    for (std::size_t i = 0; i < p.size(); ++i) CHECK((!r1.rejected[i] || r2.rejected[i]));
  }
}

TEST_CASE("thresholding fills the mask from the joint family") {
  auto r = from_p_values({0.001, 0.02, 0.04, 0.5});
  bh_threshold(r, 0.05, everything(4));
  CHECK(r.mask[0](0, 0) == 1);
  CHECK(r.mask[1](0, 0) == 1);
  CHECK(r.mask[2](0, 0) == 0);
  CHECK(r.mask[3](0, 0) == 0);
  CHECK(r.p_raw[1](0, 0) == doctest::Approx(0.02).epsilon(1e-10));
  CHECK(r.S_thresh[0](0, 0) == r.S_hat[0](0, 0));
  CHECK(r.S_thresh[2](0, 0) == 0.0);
  for (int b = 0; b < 4; ++b) CHECK(r.p_adj[b](0, 0) >= r.p_raw[b](0, 0));
  CHECK_THROWS_AS(bh_threshold(r, 0.0, everything(4)), ParameterError);
}

TEST_CASE("scaling exclusion under Haar") {
  const auto basis = haar_basis(3);
  const auto scope = scope_scaling_exclusion(basis);
  CHECK_FALSE(scope.tested[0]);
  CHECK(std::count(scope.tested.begin(), scope.tested.end(), true) == 7);

  std::vector<RawFunction> raw{RawFunction([](double) { return 1.0; }),
                               RawFunction([](double t) { return t; })};
  const auto generic = orthonormalize(raw);
  const auto all = scope_scaling_exclusion(generic);
  CHECK(all.tested == std::vector<bool>{true, true});
  CHECK(scope_scaling_exclusion(generic, true).tested == std::vector<bool>{false, true});

  const auto c = random_sparse_coeffs(5, 8, 0.6, 31);
  const auto sub = random_subspace(5, 2, 32);

  const auto zero = estimate_affinity(c, sub, basis, 0.0);
  CHECK(zero.S_thresh[0] == zero.S_hat[0]);
  for (int b = 1; b < 8; ++b) CHECK(zero.S_thresh[b].isZero(0.0));

  const auto one = estimate_affinity(c, sub, basis, 1.0);
  for (int b = 0; b < 8; ++b) {
    for (int p = 0; p < 2; ++p) {
      for (int q = 0; q < 2; ++q) {
        if (b == 0 || one.testable[b](p, q)) {
          CHECK(one.S_thresh[b](p, q) == one.S_hat[b](p, q));
        } else {
          CHECK(one.S_thresh[b](p, q) == 0.0);
        }
      }
    }
  }
}

TEST_CASE("result invariants and JSON round trip") {
  const auto c = random_sparse_coeffs(6, 4, 0.3, 40);
  const auto r = estimate_affinity(c, random_subspace(6, 2, 41), haar_basis(2), 0.2);
  for (int b = 0; b < 4; ++b) {
    for (int p = 0; p < 2; ++p) {
      for (int q = 0; q < 2; ++q) {
        CHECK(r.p_raw[b](p, q) >= 0.0);
        CHECK(r.p_raw[b](p, q) <= 1.0);
        CHECK(r.p_adj[b](p, q) >= r.p_raw[b](p, q));
        CHECK(r.p_adj[b](p, q) <= 1.0);
        const int m = r.mask[b](p, q);
        CHECK((m == 0 || m == 1));
        CHECK(r.S_thresh[b](p, q) == (m ? r.S_hat[b](p, q) : 0.0));
      }
    }
  }
  const auto back = affinity_from_json(affinity_to_json(r));
  CHECK(back.rank == r.rank);
  CHECK(back.alpha == r.alpha);
  CHECK(back.tested == r.tested);
  for (int b = 0; b < 4; ++b) {
    CHECK(back.S_hat[b] == r.S_hat[b]);
    CHECK(back.p_adj[b] == r.p_adj[b]);
    CHECK(back.mask[b] == r.mask[b]);
    CHECK(back.S_thresh[b] == r.S_thresh[b]);
  }
  CHECK(affinity_to_json(back) == affinity_to_json(r));
}
