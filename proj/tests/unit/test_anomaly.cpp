#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"

#include "anie/anomaly.hpp"
#include "anie/error.hpp"

using namespace anie;

namespace {

AffinityResult random_affinity(int d, int J, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::bernoulli_distribution keep(0.5);
  AffinityResult r;
  r.rank = d;
  r.basis_size = 1 << J;
  for (int b = 0; b < r.basis_size; ++b) {
    Eigen::MatrixXd S = Eigen::MatrixXd::NullaryExpr(d, d, [&] { return g(rng); });
    Eigen::MatrixXi M = Eigen::MatrixXi::NullaryExpr(d, d, [&] { return int(keep(rng)); });
    r.S_hat.push_back(S);
    r.mask.push_back(M);
    r.S_thresh.push_back(S.cwiseProduct(M.cast<double>()));
  }
  return r;
}

}  // namespace

TEST_CASE("zero coefficients give a zero profile") {
  AffinityResult r;
  r.rank = 2;
  r.basis_size = 8;
  r.S_hat.assign(8, Eigen::MatrixXd::Zero(2, 2));
  r.S_thresh = r.S_hat;
  const auto profile = multiscale_score(r, haar_basis(3));
  CHECK(profile.levels() == 3);
  for (int j = 0; j < 3; ++j) {
    CHECK(profile.scores[j].size() == (std::size_t{1} << j));
    for (double x : profile.scores[j]) CHECK(x == 0.0);
  }
}

TEST_CASE("single detail coefficient") {
  AffinityResult r;
  r.rank = 1;
  r.basis_size = 4;
  r.S_hat.assign(4, Eigen::MatrixXd::Zero(1, 1));
  r.S_hat[haar_index(1, 0)](0, 0) = -3.0;
  r.S_thresh = r.S_hat;
  const auto profile = multiscale_score(r, haar_basis(2));
  CHECK(profile.at(1, 0.2) == 3.0);
  CHECK(profile.at(1, 0.49) == 3.0);
  CHECK(profile.at(1, 0.5) == 0.0);
  CHECK(profile.at(1, 1.0) == 0.0);
  CHECK(profile.at(0, 0.2) == 0.0);
  CHECK(profile.summed(0.1) == 3.0);
}

TEST_CASE("scores match the direct double sum") {
  const auto r = random_affinity(2, 4, 5);
  const auto basis = haar_basis(4);
  const auto raw = multiscale_score(r, basis, ScoreSource::raw);
  const auto thr = multiscale_score(r, basis, ScoreSource::thresholded);
  for (int j = 0; j < 4; ++j) {
    for (int k = 0; k < (1 << j); ++k) {
      const int b = haar_index(j, k);
      double expected = 0.0;
      for (int p = 0; p < 2; ++p) {
        for (int q = 0; q < 2; ++q) expected += std::abs(r.S_hat[b](p, q));
      }
      CHECK(raw.scores[j][k] == doctest::Approx(expected).epsilon(1e-14));
      CHECK(thr.scores[j][k] <= raw.scores[j][k]);
      CHECK(thr.scores[j][k] >= 0.0);
      const double mid = (k + 0.5) / (1 << j);
      CHECK(raw.at(j, mid) == raw.scores[j][k]);
    }
  }
}

TEST_CASE("each scale depends only on its own coefficients") {
  auto r = random_affinity(3, 4, 8);
  const auto basis = haar_basis(4);
  const auto before = multiscale_score(r, basis, ScoreSource::raw);
  for (int k = 0; k < 4; ++k) r.S_hat[haar_index(2, k)] *= -7.0;
  const auto after = multiscale_score(r, basis, ScoreSource::raw);
  for (int j : {0, 1, 3}) CHECK(after.scores[j] == before.scores[j]);
  CHECK(after.scores[2] != before.scores[2]);
}

TEST_CASE("non-Haar bases are rejected") {
  std::vector<RawFunction> raw{RawFunction([](double) { return 1.0; })};
  AffinityResult r;
  r.rank = 1;
  r.basis_size = 1;
  r.S_hat.assign(1, Eigen::MatrixXd::Zero(1, 1));
  r.S_thresh = r.S_hat;
  CHECK_THROWS_AS(multiscale_score(r, orthonormalize(raw)), ParameterError);
}

TEST_CASE("CSV export") {
  const auto profile = multiscale_score(random_affinity(1, 2, 3), haar_basis(2));
  const auto path = std::filesystem::temp_directory_path() / "anie_anomaly.csv";
  save_anomaly_csv(profile, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "scale,cell_index,t_start,t_end,score");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);
  std::ifstream again(path);
  std::getline(again, line);
  std::getline(again, line);
  CHECK(line.rfind("0,0,0,1,", 0) == 0);
}
