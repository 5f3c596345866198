#include "anie/baselines.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <tuple>

#include "anie/coeffs.hpp"
#include "anie/error.hpp"
#include "anie/io.hpp"
#include "json.hpp"

namespace anie {

namespace {

void check_unit_interval(const EventStream& stream) {
  for (const auto& e : stream.events()) {
    if (!(e.t >= 0.0 && e.t <= 1.0)) {
      throw DomainError("timestamp " + format_double(e.t) + " outside [0, 1]");
    }
  }
}

constexpr double kInvSqrt2Pi = 0.3989422804014327;
// Kernel terms beyond this many bandwidths are below 1e-31 and skipped in
// the subspace congruence.
constexpr double kCutoffBandwidths = 12.0;

}  // namespace

Eigen::MatrixXd NaiveIntensity::dense(double t) const {
  const NodeId n = n_nodes();
  Eigen::MatrixXd out(n, n);
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = 0; v < n; ++v) out(u, v) = value(u, v, t);
  }
  return out;
}

HistogramIntensity::HistogramIntensity(const EventStream& stream, int bins, bool include_self_loops)
    : n_nodes_(stream.n_nodes()), bins_(bins) {
  if (bins < 1) throw ParameterError("histogram needs at least one bin");
  check_unit_interval(stream);
  std::vector<std::tuple<int, NodeId, NodeId>> keyed;
  keyed.reserve(stream.size());
  for (const auto& e : stream.events()) {
    if (e.u == e.v && !include_self_loops) continue;
    keyed.emplace_back(bin_of(e.t), e.u, e.v);
  }
  std::sort(keyed.begin(), keyed.end());
  counts_.resize(static_cast<std::size_t>(bins));
  for (std::size_t i = 0; i < keyed.size();) {
    std::size_t j = i;
    while (j < keyed.size() && keyed[j] == keyed[i]) ++j;
    const auto& [bin, u, v] = keyed[i];
    counts_[static_cast<std::size_t>(bin)].push_back({u, v, static_cast<std::int64_t>(j - i)});
    i = j;
  }
}

int HistogramIntensity::bin_of(double t) const {
  const auto b = static_cast<int>(std::floor(t * bins_));
  return std::clamp(b, 0, bins_ - 1);
}

double HistogramIntensity::value(NodeId u, NodeId v, double t) const {
  const auto& list = counts_[static_cast<std::size_t>(bin_of(t))];
  auto it = std::lower_bound(list.begin(), list.end(), std::pair{u, v},
                             [](const Count& c, const std::pair<NodeId, NodeId>& key) {
                               return std::pair{c.u, c.v} < key;
                             });
  if (it == list.end() || it->u != u || it->v != v) return 0.0;
  return static_cast<double>(bins_) * static_cast<double>(it->count);
}

Eigen::MatrixXd HistogramIntensity::congruence(const Eigen::MatrixXd& U, double t) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(U.cols(), U.cols());
  for (const auto& c : counts_[static_cast<std::size_t>(bin_of(t))]) {
    out.noalias() += static_cast<double>(c.count) * U.row(c.u).transpose() * U.row(c.v);
  }
  return static_cast<double>(bins_) * out;
}

KernelIntensity::KernelIntensity(const EventStream& stream, double bandwidth,
                                 bool include_self_loops)
    : n_nodes_(stream.n_nodes()), h_(bandwidth) {
  if (!(bandwidth > 0.0)) throw ParameterError("bandwidth must be positive");
  check_unit_interval(stream);
  for (const auto& e : stream.events()) {
    if (e.u == e.v && !include_self_loops) continue;
    by_time_.push_back(e);
  }
  by_pair_ = by_time_;
  std::sort(by_pair_.begin(), by_pair_.end(), [](const Event& a, const Event& b) {
    return std::tie(a.u, a.v, a.t) < std::tie(b.u, b.v, b.t);
  });
}

double KernelIntensity::kernel(double t, double tau) const {
  auto k = [this](double x) { return std::exp(-0.5 * (x / h_) * (x / h_)) * kInvSqrt2Pi / h_; };
  return k(t - tau) + k(t + tau) + k(t - 2.0 + tau);
}

double KernelIntensity::value(NodeId u, NodeId v, double t) const {
  auto lo = std::lower_bound(by_pair_.begin(), by_pair_.end(), std::pair{u, v},
                             [](const Event& e, const std::pair<NodeId, NodeId>& key) {
                               return std::pair{e.u, e.v} < key;
                             });
  double total = 0.0;
  for (auto it = lo; it != by_pair_.end() && it->u == u && it->v == v; ++it) {
    total += kernel(t, it->t);
  }
  return total;
}

Eigen::MatrixXd KernelIntensity::congruence(const Eigen::MatrixXd& U, double t) const {
  const double cut = kCutoffBandwidths * h_;
  auto index_of = [this](double x) {
    return static_cast<std::size_t>(
        std::lower_bound(by_time_.begin(), by_time_.end(), x,
                         [](const Event& e, double value) { return e.t < value; }) -
        by_time_.begin());
  };
  // Direct window around t plus the events whose reflections reach t.
  std::array<std::pair<std::size_t, std::size_t>, 3> ranges{{
      {index_of(t - cut), index_of(t + cut)},
      {0, index_of(cut - t)},
      {index_of(2.0 - t - cut), by_time_.size()},
  }};
  std::sort(ranges.begin(), ranges.end());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(U.cols(), U.cols());
  std::size_t done = 0;
  for (auto [a, b] : ranges) {
    for (std::size_t i = std::max(a, done); i < b; ++i) {
      const auto& e = by_time_[i];
      out.noalias() += kernel(t, e.t) * U.row(e.u).transpose() * U.row(e.v);
    }
    done = std::max(done, b);
  }
  return out;
}

LowRankMatrix project_low_rank(const NaiveIntensity& naive, const SubspaceEstimate& sub, double t) {
  if (sub.U_hat.rows() != naive.n_nodes()) {
    throw ShapeError("subspace rows do not match the naive estimate's node count");
  }
  return {sub.U_hat, naive.congruence(sub.U_hat, t)};
}

Eigen::MatrixXd project_low_rank(const Eigen::MatrixXd& dense, const Eigen::MatrixXd& U) {
  if (dense.rows() != U.rows() || dense.cols() != U.rows()) {
    throw ShapeError("dense matrix does not match the subspace");
  }
  return U * (U.transpose() * dense * U) * U.transpose();
}

BaselineConfig baseline_config_from_json(std::string_view json) {
  BaselineConfig c;
  try {
    const auto doc = nlohmann::json::parse(json);
    if (!doc.is_object()) throw ParameterError("baseline config must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
      if (key == "kind") {
        const auto kind = value.get<std::string>();
        if (kind == "hist") c.kind = BaselineKind::hist;
        else if (kind == "kde") c.kind = BaselineKind::kde;
        else throw ParameterError("baseline kind must be 'hist' or 'kde'");
      } else if (key == "bins") {
        c.bins = value.get<int>();
      } else if (key == "bandwidth") {
        c.bandwidth = value.get<double>();
      } else {
        throw ParameterError("unknown baseline config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("baseline config: ") + e.what());
  }
  if (c.bins < 1) throw ParameterError("bins must be >= 1");
  if (!(c.bandwidth > 0.0)) throw ParameterError("bandwidth must be > 0");
  return c;
}

BaselineConfig default_baseline(BaselineKind kind, std::string_view dataset) {
  BaselineConfig c;
  c.kind = kind;
  if (dataset == "er_blocks") {
    c.bins = 128;
    c.bandwidth = 0.005;
  } else if (dataset == "dsbm" || dataset == "sbm") {
    c.bins = 64;
    c.bandwidth = 0.05;
  } else {
    throw ParameterError("no baseline defaults for dataset '" + std::string(dataset) + "'");
  }
  return c;
}

BaselineModel fit_baseline(const EventStream& stream, const BaselineConfig& config,
                           SubspaceEstimate sub) {
  if (sub.U_hat.rows() != stream.n_nodes()) {
    throw ShapeError("subspace rows do not match the stream's node count");
  }
  BaselineModel model{config, nullptr, std::move(sub)};
  if (config.kind == BaselineKind::hist) {
    model.naive = std::make_shared<HistogramIntensity>(stream, config.bins);
  } else {
    model.naive = std::make_shared<KernelIntensity>(stream, config.bandwidth);
  }
  return model;
}

PairEvaluator evaluator(const BaselineModel& model) {
  auto naive = model.naive;
  const Eigen::MatrixXd U = model.sub.U_hat;
  return low_rank_evaluator(U, [naive, U](double t) { return naive->congruence(U, t); });
}

SubspaceEstimate histogram_subspace(const EventStream& stream, int bins, const SvdOptions& options) {
  const HistogramIntensity hist(stream, bins);
  const double root = std::sqrt(static_cast<double>(bins));
  std::vector<std::vector<CoeffEntry>> per_bin(static_cast<std::size_t>(bins));
  for (int b = 0; b < bins; ++b) {
    for (const auto& c : hist.bin_counts(b)) {
      const auto count = static_cast<double>(c.count);
      per_bin[static_cast<std::size_t>(b)].push_back({c.u, c.v, root * count, bins * count});
    }
  }
  return truncated_svd(CoeffSet(stream.n_nodes(), 0, std::move(per_bin)), options);
}

}  // namespace anie
