#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "anie/events.hpp"
#include "anie/model.hpp"
#include "anie/subspace.hpp"

namespace anie {

// A per-pair naive intensity estimate Lambda~(t).
class NaiveIntensity {
 public:
  virtual ~NaiveIntensity() = default;
  virtual NodeId n_nodes() const = 0;
  virtual double value(NodeId u, NodeId v, double t) const = 0;
  // U^T Lambda~(t) U, accumulated over the sparse support only.
  virtual Eigen::MatrixXd congruence(const Eigen::MatrixXd& U, double t) const = 0;
  Eigen::MatrixXd dense(double t) const;
};

// Lambda~_uv(t) = M * count_uv(bin containing t), bins of width 1/M with
// t = 1 in the last bin.
class HistogramIntensity final : public NaiveIntensity {
 public:
  HistogramIntensity(const EventStream& stream, int bins, bool include_self_loops = false);

  NodeId n_nodes() const override { return n_nodes_; }
  int bins() const noexcept { return bins_; }
  int bin_of(double t) const;
  double value(NodeId u, NodeId v, double t) const override;
  Eigen::MatrixXd congruence(const Eigen::MatrixXd& U, double t) const override;

  struct Count {
    NodeId u;
    NodeId v;
    std::int64_t count;
  };
  const std::vector<Count>& bin_counts(int bin) const { return counts_.at(bin); }

 private:
  NodeId n_nodes_;
  int bins_;
  std::vector<std::vector<Count>> counts_;  // per bin, sorted by (u, v)
};

// Gaussian kernel estimate with reflection at 0 and 1:
// Lambda~_uv(t) = sum_tau K_h(t - tau) + K_h(t + tau) + K_h(t - 2 + tau).
class KernelIntensity final : public NaiveIntensity {
 public:
  KernelIntensity(const EventStream& stream, double bandwidth,
                  bool include_self_loops = false);

  NodeId n_nodes() const override { return n_nodes_; }
  double bandwidth() const noexcept { return h_; }
  double value(NodeId u, NodeId v, double t) const override;
  Eigen::MatrixXd congruence(const Eigen::MatrixXd& U, double t) const override;

  // Reflected kernel contribution of one event at tau.
  double kernel(double t, double tau) const;

 private:
  NodeId n_nodes_;
  double h_;
  std::vector<Event> by_pair_;  // sorted by (u, v, t)
  std::vector<Event> by_time_;  // sorted by t
};

// U (U^T A U) U^T kept in factored form.
struct LowRankMatrix {
  Eigen::MatrixXd U;
  Eigen::MatrixXd core;

  double at(NodeId u, NodeId v) const { return U.row(u) * core * U.row(v).transpose(); }
  Eigen::MatrixXd dense() const { return U * core * U.transpose(); }
};

LowRankMatrix project_low_rank(const NaiveIntensity& naive, const SubspaceEstimate& sub,
                               double t);
// Same congruence applied to an explicit dense matrix.
Eigen::MatrixXd project_low_rank(const Eigen::MatrixXd& dense, const Eigen::MatrixXd& U);

enum class BaselineKind { hist, kde };

struct BaselineConfig {
  BaselineKind kind = BaselineKind::hist;
  int bins = 64;
  double bandwidth = 0.05;
};

// `{ "kind": "hist"|"kde", "bins": int, "bandwidth": float }`
BaselineConfig baseline_config_from_json(std::string_view json);
// Appendix defaults: hist 128 / KDE 0.005 for ER-blocks, 64 / 0.05 for SBM.
BaselineConfig default_baseline(BaselineKind kind, std::string_view dataset);

struct BaselineModel {
  BaselineConfig config;
  std::shared_ptr<const NaiveIntensity> naive;
  SubspaceEstimate sub;
};

BaselineModel fit_baseline(const EventStream& stream, const BaselineConfig& config,
                           SubspaceEstimate sub);

PairEvaluator evaluator(const BaselineModel& model);

// Subspace from the histogram coefficient matrices (orthonormal bin
// indicators sqrt(M) 1_bin) instead of the ANIE coefficients.
SubspaceEstimate histogram_subspace(const EventStream& stream, int bins,
                                    const SvdOptions& options);

}  // namespace anie
