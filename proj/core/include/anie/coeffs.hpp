#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "anie/basis.hpp"
#include "anie/events.hpp"

namespace anie {

// One stored entry of a per-basis coefficient matrix: Y_uv(phi) and
// Y_uv(phi^2) for a pair with at least one event in the support of phi.
struct CoeffEntry {
  NodeId u = 0;
  NodeId v = 0;
  double value = 0.0;
  double sq = 0.0;
};

// Sparse empirical coefficient matrices Y(phi^b) and Y((phi^b)^2), one
// pair-sorted entry list per basis function.
class CoeffSet {
 public:
  CoeffSet() = default;
  // Entries of each list must be sorted by (u, v) without duplicates.
  CoeffSet(NodeId n_nodes, std::uint64_t basis_hash,
           std::vector<std::vector<CoeffEntry>> per_basis);

  NodeId n_nodes() const noexcept { return n_nodes_; }
  int basis_size() const noexcept { return static_cast<int>(per_basis_.size()); }
  std::uint64_t basis_hash() const noexcept { return basis_hash_; }

  std::span<const CoeffEntry> entries(int b) const { return per_basis_.at(b); }
  std::size_t total_entries() const noexcept;

  bool contains(int b, NodeId u, NodeId v) const;
  // Zero when the pair is not stored.
  double value(int b, NodeId u, NodeId v) const;
  double sq(int b, NodeId u, NodeId v) const;

 private:
  const CoeffEntry* find(int b, NodeId u, NodeId v) const;

  NodeId n_nodes_ = 0;
  std::uint64_t basis_hash_ = 0;
  std::vector<std::vector<CoeffEntry>> per_basis_;
};

struct ProjectOptions {
  bool include_self_loops = false;
};

// Projects the counting measure of each node pair onto every basis function.
// Haar families are computed from exact dyadic counts. Throws DomainError when
// timestamps fall outside [0, 1].
CoeffSet project(const EventStream& stream, const BasisSet& basis,
                 const ProjectOptions& options = {});

struct PairCounts {
  NodeId u = 0;
  NodeId v = 0;
  std::vector<std::int64_t> counts;  // one per I_{j,k}, k = 0..2^j-1
};

// Per-pair event counts on the dyadic cells of level j (pairs with no events
// omitted, sorted by (u, v)).
std::vector<PairCounts> interval_counts(const EventStream& stream, int j,
                                        const ProjectOptions& options = {});

// JSON cache of a CoeffSet: per-b lists of [u, v, value, sq] plus the basis
// descriptor hash.
void save_coeffs(const CoeffSet& coeffs, const std::filesystem::path& path);
CoeffSet load_coeffs(const std::filesystem::path& path);

}  // namespace anie
