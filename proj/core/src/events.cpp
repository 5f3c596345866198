#include "anie/events.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

#include "anie/error.hpp"
#include "anie/io.hpp"

namespace anie {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_number(std::string_view field, T& out) {
  field = trim(field);
  if (field.empty()) return false;
  if (field.front() == '+') field.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc() && ptr == field.data() + field.size();
}

struct RawRow {
  std::int64_t u;
  std::int64_t v;
  double t;
};

}  // namespace

EventStream::EventStream(NodeId n_nodes, double horizon, std::vector<Event> events,
                         Directedness directedness)
    : n_nodes_(n_nodes),
      horizon_(horizon),
      events_(std::move(events)),
      directedness_(directedness) {
  if (n_nodes < 0) throw ValidationError("n_nodes must be non-negative");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
    throw ValidationError("horizon must be a finite non-negative number");
  }
  for (const auto& e : events_) {
    if (e.u < 0 || e.v < 0) throw ValidationError("negative node id");
    if (e.u >= n_nodes || e.v >= n_nodes) {
      throw ValidationError("node id " + std::to_string(std::max(e.u, e.v)) +
                            " out of range for n_nodes = " + std::to_string(n_nodes));
    }
    if (!(e.t >= 0.0)) throw ValidationError("negative or NaN timestamp");
    if (e.t > horizon) {
      throw ValidationError("timestamp " + format_double(e.t) + " exceeds horizon " +
                            format_double(horizon));
    }
    if (e.u == e.v) ++self_loops_;
  }
  auto by_time = [](const Event& a, const Event& b) { return a.t < b.t; };
  if (!std::is_sorted(events_.begin(), events_.end(), by_time)) {
    reordered_ = true;
    std::stable_sort(events_.begin(), events_.end(), by_time);
  }
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".json");
  return p;
}

LoadedEvents parse_events(std::string_view csv, const LoadOptions& options) {
  std::vector<RawRow> rows;
  long line_no = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    std::size_t nl = csv.find('\n', pos);
    std::string_view line = csv.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? csv.size() + 1 : nl + 1;
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;

    std::string_view fields[4];
    int count = 0;
    std::size_t start = 0;
    while (count < 4) {
      std::size_t comma = line.find(',', start);
      fields[count++] = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!header_seen) {
      header_seen = true;
      if (count >= 3 && trim(fields[0]) == "u" && trim(fields[1]) == "v" && trim(fields[2]) == "t") {
        continue;
      }
    }
    // A fourth column (e.g. a weight) is tolerated and ignored.
    RawRow row{};
    if (count < 3 || !parse_number(fields[0], row.u) || !parse_number(fields[1], row.v) ||
        !parse_number(fields[2], row.t) || !std::isfinite(row.t)) {
      throw ParseError("malformed row at line " + std::to_string(line_no) + ": '" +
                           std::string(line) + "'",
                       line_no);
    }
    if (row.u < 0 || row.v < 0) {
      throw ValidationError("negative node id at line " + std::to_string(line_no));
    }
    if (row.t < 0.0) {
      throw ValidationError("negative timestamp at line " + std::to_string(line_no));
    }
    rows.push_back(row);
  }

  LoadedEvents out;
  std::int64_t max_id = -1;
  std::set<std::int64_t> ids;
  for (const auto& r : rows) {
    max_id = std::max({max_id, r.u, r.v});
    ids.insert(r.u);
    ids.insert(r.v);
  }

  NodeId n_nodes = 0;
  std::map<std::int64_t, NodeId> relabel;
  if (options.n_nodes) {
    n_nodes = *options.n_nodes;
    if (max_id >= n_nodes) {
      throw ValidationError("node id " + std::to_string(max_id) + " >= n_nodes " +
                            std::to_string(n_nodes));
    }
  } else if (static_cast<std::int64_t>(ids.size()) != max_id + 1) {
    NodeId next = 0;
    for (auto id : ids) {
      relabel[id] = next++;
      out.relabel.push_back(id);
    }
    n_nodes = next;
    out.notices.push_back("node ids are not dense; relabeled " + std::to_string(ids.size()) +
                          " ids to 0.." + std::to_string(next - 1));
  } else {
    if (max_id + 1 > std::numeric_limits<NodeId>::max()) throw ValidationError("too many nodes");
    n_nodes = static_cast<NodeId>(max_id + 1);
  }

  double horizon = 1.0;
  if (options.horizon) {
    horizon = *options.horizon;
  } else if (!rows.empty()) {
    horizon = 0.0;
    for (const auto& r : rows) horizon = std::max(horizon, r.t);
  }

  const Directedness dir = options.directedness.value_or(Directedness::directed);
  std::vector<Event> events;
  events.reserve(dir == Directedness::undirected ? 2 * rows.size() : rows.size());
  auto map_id = [&](std::int64_t id) {
    return relabel.empty() ? static_cast<NodeId>(id) : relabel.at(id);
  };
  for (const auto& r : rows) {
    Event e{map_id(r.u), map_id(r.v), r.t};
    events.push_back(e);
    if (dir == Directedness::undirected && e.u != e.v) events.push_back({e.v, e.u, e.t});
  }
  out.stream = EventStream(n_nodes, horizon, std::move(events), dir);
  if (out.stream.was_reordered()) out.notices.push_back("rows were not in time order; sorted");
  if (out.stream.self_loop_count() > 0) {
    out.notices.push_back(std::to_string(out.stream.self_loop_count()) + " self-loop events");
  }
  return out;
}

LoadedEvents load_events(const std::filesystem::path& path, const LoadOptions& options) {
  LoadOptions merged = options;
  if (options.use_sidecar) {
    const auto side = sidecar_path(path);
    if (side != path && std::filesystem::exists(side)) {
      nlohmann::json meta;
      try {
        meta = nlohmann::json::parse(read_file(side));
      } catch (const nlohmann::json::exception& e) {
        throw ParseError("sidecar " + side.string() + ": " + e.what(), 0);
      }
      try {
        if (!merged.n_nodes && meta.contains("n_nodes")) merged.n_nodes = meta.at("n_nodes").get<NodeId>();
        if (!merged.horizon && meta.contains("horizon")) merged.horizon = meta.at("horizon").get<double>();
        if (!merged.directedness && meta.contains("directed")) {
          merged.directedness = meta.at("directed").get<bool>() ? Directedness::directed
                                                               : Directedness::undirected;
        }
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError("sidecar " + side.string() + ": " + e.what());
      }
    }
  }
  if (!std::filesystem::exists(path)) throw Error(ErrorKind::data, "no such file: " + path.string());
  return parse_events(read_file(path), merged);
}

void save_events(const EventStream& stream, const std::filesystem::path& path) {
  std::string csv = "u,v,t\n";
  for (const auto& e : stream.events()) {
    if (stream.directedness() == Directedness::undirected && e.u > e.v) continue;
    csv += std::to_string(e.u);
    csv += ',';
    csv += std::to_string(e.v);
    csv += ',';
    csv += format_double(e.t);
    csv += '\n';
  }
  nlohmann::ordered_json meta;
  meta["n_nodes"] = stream.n_nodes();
  meta["horizon"] = stream.horizon();
  meta["directed"] = stream.directedness() == Directedness::directed;
  write_file_atomic(path, csv);
  write_file_atomic(sidecar_path(path), meta.dump(2) + "\n");
}

EventStream rescale(const EventStream& stream) {
  const double T = stream.horizon();
  if (T == 1.0) return stream;
  if (T == 0.0) {
    if (!stream.empty()) throw DegenerateHorizonError("horizon is zero but the stream has events");
    return EventStream(stream.n_nodes(), 1.0, {}, stream.directedness());
  }
  std::vector<Event> events(stream.events().begin(), stream.events().end());
  for (auto& e : events) e.t = std::min(e.t / T, 1.0);
  return EventStream(stream.n_nodes(), 1.0, std::move(events), stream.directedness());
}

}  // namespace anie
