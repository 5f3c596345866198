#include "anie/coeffs.hpp"

#include <algorithm>
#include <cmath>

#include "anie/error.hpp"
#include "anie/io.hpp"
#include "json.hpp"

namespace anie {

namespace {

struct KeyedTime {
  std::uint64_t key;
  double t;
};

bool pair_less(const CoeffEntry& a, NodeId u, NodeId v) {
  return a.u < u || (a.u == u && a.v < v);
}

// Events grouped by ordered pair, time order preserved inside each pair.
std::vector<KeyedTime> group_by_pair(const EventStream& stream, const ProjectOptions& options) {
  const auto n = static_cast<std::uint64_t>(stream.n_nodes());
  std::vector<KeyedTime> keyed;
  keyed.reserve(stream.size());
  for (const auto& e : stream.events()) {
    if (!(e.t >= 0.0 && e.t <= 1.0)) {
      throw DomainError("timestamp " + format_double(e.t) +
                        " outside [0, 1]; rescale the stream first");
    }
    if (e.u == e.v && !options.include_self_loops) continue;
    keyed.push_back({static_cast<std::uint64_t>(e.u) * n + static_cast<std::uint64_t>(e.v), e.t});
  }
  std::stable_sort(keyed.begin(), keyed.end(),
                   [](const KeyedTime& a, const KeyedTime& b) { return a.key < b.key; });
  return keyed;
}

std::int64_t dyadic_cell(int j, double t) {
  return j == 0 ? 0 : haar_fine_cell(j - 1, t);
}

}  // namespace

CoeffSet::CoeffSet(NodeId n_nodes, std::uint64_t basis_hash,
                   std::vector<std::vector<CoeffEntry>> per_basis)
    : n_nodes_(n_nodes), basis_hash_(basis_hash), per_basis_(std::move(per_basis)) {
  for (const auto& list : per_basis_) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto& e = list[i];
      if (e.u < 0 || e.v < 0 || e.u >= n_nodes_ || e.v >= n_nodes_) {
        throw ShapeError("coefficient entry outside the node range");
      }
      if (i > 0 && !pair_less(list[i - 1], e.u, e.v)) {
        throw ShapeError("coefficient entries must be sorted by (u, v) without duplicates");
      }
    }
  }
}

std::size_t CoeffSet::total_entries() const noexcept {
  std::size_t n = 0;
  for (const auto& list : per_basis_) n += list.size();
  return n;
}

const CoeffEntry* CoeffSet::find(int b, NodeId u, NodeId v) const {
  const auto& list = per_basis_.at(b);
  auto it = std::lower_bound(list.begin(), list.end(), std::pair{u, v},
                             [](const CoeffEntry& e, const std::pair<NodeId, NodeId>& key) {
                               return pair_less(e, key.first, key.second);
                             });
  if (it == list.end() || it->u != u || it->v != v) return nullptr;
  return &*it;
}

bool CoeffSet::contains(int b, NodeId u, NodeId v) const { return find(b, u, v) != nullptr; }

double CoeffSet::value(int b, NodeId u, NodeId v) const {
  const auto* e = find(b, u, v);
  return e ? e->value : 0.0;
}

double CoeffSet::sq(int b, NodeId u, NodeId v) const {
  const auto* e = find(b, u, v);
  return e ? e->sq : 0.0;
}

CoeffSet project(const EventStream& stream, const BasisSet& basis, const ProjectOptions& options) {
  const auto keyed = group_by_pair(stream, options);
  const int B = basis.size();
  const auto n = static_cast<std::uint64_t>(stream.n_nodes());
  std::vector<std::vector<CoeffEntry>> per_basis(static_cast<std::size_t>(B));

  std::size_t i0 = 0;
  while (i0 < keyed.size()) {
    std::size_t i1 = i0;
    while (i1 < keyed.size() && keyed[i1].key == keyed[i0].key) ++i1;
    const auto u = static_cast<NodeId>(keyed[i0].key / n);
    const auto v = static_cast<NodeId>(keyed[i0].key % n);

    if (basis.is_haar()) {
      const auto count = static_cast<double>(i1 - i0);
      per_basis[0].push_back({u, v, count, count});
      for (int j = 0; j < basis.max_level(); ++j) {
        const double h = haar_height(j);
        std::size_t i = i0;
        while (i < i1) {
          const std::int64_t k = haar_fine_cell(j, keyed[i].t) >> 1;
          std::int64_t left = 0;
          std::int64_t right = 0;
          for (; i < i1; ++i) {
            const std::int64_t m = haar_fine_cell(j, keyed[i].t);
            if ((m >> 1) != k) break;
            ((m & 1) == 0 ? left : right) += 1;
          }
          per_basis[static_cast<std::size_t>(haar_index(j, k))].push_back(
              {u, v, h * static_cast<double>(left - right),
               h * h * static_cast<double>(left + right)});
        }
      }
    } else {
      for (int b = 0; b < B; ++b) {
        double value = 0.0;
        double sq = 0.0;
        for (std::size_t i = i0; i < i1; ++i) {
          const double x = basis.eval(b, keyed[i].t);
          value += x;
          sq += x * x;
        }
        per_basis[static_cast<std::size_t>(b)].push_back({u, v, value, sq});
      }
    }
    i0 = i1;
  }
  return CoeffSet(stream.n_nodes(), basis.descriptor_hash(), std::move(per_basis));
}

std::vector<PairCounts> interval_counts(const EventStream& stream, int j,
                                        const ProjectOptions& options) {
  if (j < 0 || j > 30) throw ParameterError("level must be in [0, 30]");
  const auto keyed = group_by_pair(stream, options);
  const auto n = static_cast<std::uint64_t>(stream.n_nodes());
  const auto cells = static_cast<std::size_t>(std::int64_t{1} << j);
  std::vector<PairCounts> out;
  std::size_t i0 = 0;
  while (i0 < keyed.size()) {
    PairCounts pc{static_cast<NodeId>(keyed[i0].key / n), static_cast<NodeId>(keyed[i0].key % n),
                  std::vector<std::int64_t>(cells, 0)};
    std::size_t i1 = i0;
    for (; i1 < keyed.size() && keyed[i1].key == keyed[i0].key; ++i1) {
      pc.counts[static_cast<std::size_t>(dyadic_cell(j, keyed[i1].t))] += 1;
    }
    out.push_back(std::move(pc));
    i0 = i1;
  }
  return out;
}

void save_coeffs(const CoeffSet& coeffs, const std::filesystem::path& path) {
  nlohmann::ordered_json doc;
  doc["n_nodes"] = coeffs.n_nodes();
  doc["basis_hash"] = coeffs.basis_hash();
  nlohmann::json blocks = nlohmann::json::array();
  for (int b = 0; b < coeffs.basis_size(); ++b) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& e : coeffs.entries(b)) list.push_back({e.u, e.v, e.value, e.sq});
    blocks.push_back(std::move(list));
  }
  doc["coefficients"] = std::move(blocks);
  write_file_atomic(path, doc.dump() + "\n");
}

CoeffSet load_coeffs(const std::filesystem::path& path) {
  try {
    const auto doc = nlohmann::json::parse(read_file(path));
    std::vector<std::vector<CoeffEntry>> per_basis;
    for (const auto& list : doc.at("coefficients")) {
      auto& out = per_basis.emplace_back();
      for (const auto& e : list) {
        out.push_back({e.at(0).get<NodeId>(), e.at(1).get<NodeId>(), e.at(2).get<double>(),
                       e.at(3).get<double>()});
      }
    }
    return CoeffSet(doc.at("n_nodes").get<NodeId>(), doc.at("basis_hash").get<std::uint64_t>(),
                    std::move(per_basis));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("coefficient cache " + path.string() + ": " + e.what());
  }
}

}  // namespace anie
