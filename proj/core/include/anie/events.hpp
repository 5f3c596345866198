#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace anie {

using NodeId = std::int32_t;

struct Event {
  NodeId u = 0;
  NodeId v = 0;
  double t = 0.0;

  friend bool operator==(const Event&, const Event&) = default;
};

enum class Directedness { directed, undirected };

// Validated, time-ordered interaction events on nodes [0, n_nodes) over
// [0, horizon]. Immutable once built.
class EventStream {
 public:
  EventStream() = default;

  // Validates ids and timestamps and stable-sorts by time. Throws
  // ValidationError on negative ids/times, ids >= n_nodes or t > horizon.
  EventStream(NodeId n_nodes, double horizon, std::vector<Event> events,
              Directedness directedness = Directedness::directed);

  NodeId n_nodes() const noexcept { return n_nodes_; }
  double horizon() const noexcept { return horizon_; }
  std::span<const Event> events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }
  bool empty() const noexcept { return events_.empty(); }
  Directedness directedness() const noexcept { return directedness_; }
  std::size_t self_loop_count() const noexcept { return self_loops_; }
  // True when the input was not already in time order.
  bool was_reordered() const noexcept { return reordered_; }

 private:
  NodeId n_nodes_ = 0;
  double horizon_ = 1.0;
  std::vector<Event> events_;
  Directedness directedness_ = Directedness::directed;
  std::size_t self_loops_ = 0;
  bool reordered_ = false;
};

struct LoadOptions {
  std::optional<NodeId> n_nodes;
  std::optional<double> horizon;
  std::optional<Directedness> directedness;
  // Look for a JSON sidecar next to the CSV (same stem, .json extension).
  bool use_sidecar = true;
};

struct LoadedEvents {
  EventStream stream;
  // Non-empty when raw ids were not dense; relabel[new_id] = raw_id.
  std::vector<std::int64_t> relabel;
  std::vector<std::string> notices;
};

// Reads a `u,v,t` CSV. Undirected input is symmetrized: each event (u,v,t)
// with u != v is mirrored to (v,u,t).
LoadedEvents load_events(const std::filesystem::path& path,
                         const LoadOptions& options = {});

// Same as load_events but from an in-memory CSV document.
LoadedEvents parse_events(std::string_view csv, const LoadOptions& options = {});

// Writes the canonical CSV plus the `<stem>.json` sidecar. Undirected streams
// are written with only one copy of each mirrored event (u <= v).
void save_events(const EventStream& stream, const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

// Divides every timestamp by the horizon so that events lie in [0, 1].
EventStream rescale(const EventStream& stream);

}  // namespace anie
