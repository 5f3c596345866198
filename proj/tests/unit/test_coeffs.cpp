#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <tuple>

#include "doctest.h"
#include "oracles.hpp"

#include "anie/coeffs.hpp"
#include "anie/error.hpp"

using namespace anie;

namespace {

EventStream random_stream(NodeId n, int events, std::uint64_t seed, bool dyadic_times = false) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<NodeId> node(0, n - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> grid(0, 64);
  std::vector<Event> out;
  for (int i = 0; i < events; ++i) {
    const double t = dyadic_times ? grid(rng) / 64.0 : unit(rng);
    out.push_back({node(rng), node(rng), t});
  }
  return EventStream(n, 1.0, std::move(out));
}

}  // namespace

TEST_CASE("single pair, Haar J=1") {
  const EventStream s(2, 1.0, {{0, 1, 0.1}, {0, 1, 0.3}});
  const auto c = project(s, haar_basis(1));
  CHECK(c.value(0, 0, 1) == 2.0);
  CHECK(c.value(1, 0, 1) == 2.0);
  CHECK(c.sq(1, 0, 1) == 2.0);
  CHECK_FALSE(c.contains(0, 1, 0));
}

TEST_CASE("empty stream gives empty maps") {
  const EventStream s(4, 1.0, {});
  const auto c = project(s, haar_basis(3));
  CHECK(c.basis_size() == 8);
  CHECK(c.total_entries() == 0);
}

TEST_CASE("cancelling events keep their key") {
  const EventStream s(2, 1.0, {{0, 1, 0.25}, {0, 1, 0.75}});
  const auto c = project(s, haar_basis(1));
  CHECK(c.contains(1, 0, 1));
  CHECK(c.value(1, 0, 1) == 0.0);
  CHECK(c.sq(1, 0, 1) == 2.0);
}

TEST_CASE("interval counts") {
  const EventStream s(2, 1.0, {{0, 1, 0.1}, {0, 1, 0.3}, {0, 1, 0.9}});
  const auto halves = interval_counts(s, 1);
  REQUIRE(halves.size() == 1);
  CHECK(halves[0].counts == std::vector<std::int64_t>{2, 1});
  const auto whole = interval_counts(s, 0);
  CHECK(whole[0].counts == std::vector<std::int64_t>{3});
  const auto quarters = interval_counts(s, 2);
  CHECK(quarters[0].counts == std::vector<std::int64_t>{1, 1, 0, 1});
}

TEST_CASE("Haar counting identity holds exactly on random streams") {
  for (bool dyadic : {false, true}) {
    const auto s = random_stream(6, 3000, dyadic ? 5 : 4, dyadic);
    const int J = 6;
    const auto c = project(s, haar_basis(J));
    for (int j = 0; j < J; ++j) {
      const auto fine = interval_counts(s, j + 1);
      for (const auto& pc : fine) {
        for (std::int64_t k = 0; k < (std::int64_t{1} << j); ++k) {
          const std::int64_t left = pc.counts[static_cast<std::size_t>(2 * k)];
          const std::int64_t right = pc.counts[static_cast<std::size_t>(2 * k + 1)];
          const double expected = haar_height(j) * static_cast<double>(left - right);
          CHECK(c.value(haar_index(j, k), pc.u, pc.v) == expected);
          CHECK(c.contains(haar_index(j, k), pc.u, pc.v) == (left + right > 0));
        }
      }
    }
  }
}

TEST_CASE("projection matches per-event evaluation") {
  const auto s = random_stream(5, 800, 9);
  const auto basis = haar_basis(4);
  const auto c = project(s, basis);
  std::map<std::tuple<int, NodeId, NodeId>, std::pair<double, double>> oracle;
  for (const auto& e : s.events()) {
    if (e.u == e.v) continue;
    for (int b = 0; b < basis.size(); ++b) {
      const double x = basis.eval(b, e.t);
      if (x == 0.0) continue;
      auto& acc = oracle[{b, e.u, e.v}];
      acc.first += x;
      acc.second += basis.eval_squared(b, e.t);
    }
  }
  std::size_t stored = 0;
  for (int b = 0; b < basis.size(); ++b) stored += c.entries(b).size();
  CHECK(stored == oracle.size());
  for (const auto& [key, acc] : oracle) {
    const auto [b, u, v] = key;
    CHECK(c.value(b, u, v) == doctest::Approx(acc.first).epsilon(1e-12));
    CHECK(c.sq(b, u, v) == doctest::Approx(acc.second).epsilon(1e-12));
  }
  // Sparsity inheritance: keys only for pairs with events in the support.
  for (int b = 1; b < basis.size(); ++b) {
    std::set<std::pair<NodeId, NodeId>> active;
    for (const auto& e : s.events()) {
      if (e.u != e.v && basis.eval(b, e.t) != 0.0) active.insert({e.u, e.v});
    }
    CHECK(c.entries(b).size() <= active.size());
  }
}

TEST_CASE("scaling coefficient is the pair event count; sq entries are non-negative") {
  const auto s = random_stream(4, 500, 12);
  const auto c = project(s, haar_basis(3));
  std::map<std::pair<NodeId, NodeId>, int> counts;
  for (const auto& e : s.events()) {
    if (e.u != e.v) ++counts[{e.u, e.v}];
  }
  for (const auto& [pair, n] : counts) CHECK(c.value(0, pair.first, pair.second) == n);
  for (int b = 0; b < c.basis_size(); ++b) {
    for (const auto& e : c.entries(b)) CHECK(e.sq >= 0.0);
  }
}

TEST_CASE("self loops are excluded unless requested") {
  const EventStream s(2, 1.0, {{0, 0, 0.2}, {0, 1, 0.4}});
  CHECK_FALSE(project(s, haar_basis(1)).contains(0, 0, 0));
  ProjectOptions opts;
  opts.include_self_loops = true;
  CHECK(project(s, haar_basis(1), opts).value(0, 0, 0) == 1.0);
}

TEST_CASE("unnormalized timestamps are a domain error") {
  const EventStream s(2, 5.0, {{0, 1, 2.0}});
  CHECK_THROWS_AS(project(s, haar_basis(2)), DomainError);
}

TEST_CASE("generic bases project by direct summation") {
  std::vector<RawFunction> raw{RawFunction([](double) { return 1.0; }),
                               RawFunction([](double t) { return t; }),
                               RawFunction([](double t) { return t * t; })};
  const auto basis = orthonormalize(raw);
  const auto s = random_stream(3, 200, 21);
  const auto c = project(s, basis);
  for (int b = 0; b < basis.size(); ++b) {
    std::map<std::pair<NodeId, NodeId>, double> oracle;
    for (const auto& e : s.events()) {
      if (e.u != e.v) oracle[{e.u, e.v}] += basis.eval(b, e.t);
    }
    CHECK(c.entries(b).size() == oracle.size());
    for (const auto& [pair, value] : oracle) {
      CHECK(c.value(b, pair.first, pair.second) == doctest::Approx(value).epsilon(1e-12));
    }
  }
}

TEST_CASE("coefficient cache round trip") {
  const auto s = random_stream(5, 300, 33);
  const auto c = project(s, haar_basis(3));
  const auto path = std::filesystem::temp_directory_path() / "anie_coeffs_cache.json";
  save_coeffs(c, path);
  const auto back = load_coeffs(path);
  CHECK(back.basis_hash() == c.basis_hash());
  CHECK(back.n_nodes() == c.n_nodes());
  for (int b = 0; b < c.basis_size(); ++b) {
    REQUIRE(back.entries(b).size() == c.entries(b).size());
    for (std::size_t i = 0; i < c.entries(b).size(); ++i) {
      CHECK(back.entries(b)[i].value == c.entries(b)[i].value);
      CHECK(back.entries(b)[i].sq == c.entries(b)[i].sq);
    }
  }
}

TEST_CASE("CoeffSet rejects unsorted entries") {
  CHECK_THROWS_AS(CoeffSet(3, 0, {{{1, 0, 1.0, 1.0}, {0, 2, 1.0, 1.0}}}), ShapeError);
  CHECK_THROWS_AS(CoeffSet(3, 0, {{{0, 5, 1.0, 1.0}}}), ShapeError);
}
