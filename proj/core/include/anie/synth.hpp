#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "anie/events.hpp"
#include "anie/model.hpp"

namespace anie {

// SplitMix64: a 64-bit counter-style generator. Independent streams are
// obtained by deriving seeds from (seed, stream ids) rather than by jumping.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

// Mixes a base seed with stream identifiers into an independent seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

// Right-continuous step function on [0, 1]: values[i] holds on
// [breakpoints[i-1], breakpoints[i]) with the outer ends at 0 and 1.
class PiecewiseConstantIntensity {
 public:
  PiecewiseConstantIntensity() : values_{0.0} {}
  // Throws ParameterError unless breakpoints are strictly increasing inside
  // (0, 1), values.size() == breakpoints.size() + 1 and values >= 0.
  PiecewiseConstantIntensity(std::vector<double> breakpoints, std::vector<double> values);

  static PiecewiseConstantIntensity constant(double rate);

  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t segments() const noexcept { return values_.size(); }
  double segment_lo(std::size_t i) const { return i == 0 ? 0.0 : breakpoints_[i - 1]; }
  double segment_hi(std::size_t i) const {
    return i == breakpoints_.size() ? 1.0 : breakpoints_[i];
  }

  double operator()(double t) const;
  double integral(double lo, double hi) const;
  double max_value() const;

 private:
  std::vector<double> breakpoints_;
  std::vector<double> values_;
};

// The ER-blocks step table (t_k, h_k).
std::span<const std::pair<double, double>> er_blocks_steps();

// Raw cumulative step value sum_{t_k <= t} h_k (may be negative).
double er_blocks_raw(double t);

// max(scale * raw + offset, 0) as a valid intensity.
PiecewiseConstantIntensity er_blocks_intensity(double scale = 1.0, double offset = 0.0);

// COSIP ground truth with block-constant pair intensities.
struct GroundTruth {
  std::string model;  // "er_blocks" or "dsbm"
  NodeId n_nodes = 0;
  // Community label per node (all zero for a single block).
  std::vector<int> assignment;
  int blocks = 1;
  // Row-major blocks x blocks table of block-pair intensities.
  std::vector<PiecewiseConstantIntensity> block_rates;
  Eigen::MatrixXd U_true;  // N x blocks, unit-norm indicator columns

  const PiecewiseConstantIntensity& pair_intensity(NodeId u, NodeId v) const;
  // S(I) such that Lambda(I) = U S(I) U^T.
  Eigen::MatrixXd affinity_measure(double lo, double hi) const;
  Eigen::MatrixXd intensity_measure(double lo, double hi) const;
};

// Exact pair intensities of the ground truth at time t.
PairEvaluator evaluator(const GroundTruth& truth);

GroundTruth er_blocks_ground_truth(NodeId n_nodes, double scale = 1.0, double offset = 0.0);

// Two equal communities; intra pairs use lambda_intra outside the merge
// interval and lambda_inter inside it, inter pairs use lambda_inter.
GroundTruth dsbm_ground_truth(NodeId n_nodes, double lambda_intra = 8.0,
                              double lambda_inter = 2.0, double merge_lo = 0.5,
                              double merge_hi = 0.75);

// Exact sampler: Poisson(rate * width) uniform points per segment, sorted.
std::vector<double> sample_piecewise(const PiecewiseConstantIntensity& intensity,
                                     std::uint64_t seed);
std::vector<double> sample_piecewise(const PiecewiseConstantIntensity& intensity,
                                     SplitMix64& rng);

// Lewis-Shedler thinning against a constant bound. Throws ParameterError
// when a candidate's intensity exceeds the bound.
std::vector<double> sample_thinning(const std::function<double(double)>& intensity,
                                    double bound, std::uint64_t seed);

// Independent sampling for every ordered pair u != v, merged into a
// directed stream on [0, 1].
EventStream generate_network(const GroundTruth& truth, std::uint64_t seed);

struct GeneratorConfig {
  std::string model = "dsbm";
  NodeId n_nodes = 100;
  std::uint64_t seed = 0;
  double scale = 1.0;
  double offset = 0.0;
  double lambda_intra = 8.0;
  double lambda_inter = 2.0;
  double merge_lo = 0.5;
  double merge_hi = 0.75;
};

// `{ "model": ..., "n_nodes": ..., "seed": ..., "params": {...} }`
GeneratorConfig generator_config_from_json(std::string_view json);
std::string generator_config_to_json(const GeneratorConfig& config);
GroundTruth make_ground_truth(const GeneratorConfig& config);

std::string truth_to_json(const GroundTruth& truth);
GroundTruth truth_from_json(std::string_view json);

}  // namespace anie
