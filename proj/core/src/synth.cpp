#include "anie/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <random>

#include "anie/error.hpp"
#include "json.hpp"

namespace anie {

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::array<std::pair<double, double>, 11> kErBlocksSteps{{
    {0.10, 4.0},
    {0.13, -5.0},
    {0.15, 3.0},
    {0.23, -4.0},
    {0.25, 5.0},
    {0.40, -4.2},
    {0.44, 2.1},
    {0.65, 4.3},
    {0.76, -3.1},
    {0.78, 5.1},
    {0.81, -4.2},
}};

Eigen::MatrixXd indicator_subspace(const std::vector<int>& assignment, int blocks) {
  std::vector<int> sizes(static_cast<std::size_t>(blocks), 0);
  for (int c : assignment) ++sizes[static_cast<std::size_t>(c)];
  Eigen::MatrixXd U = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(assignment.size()), blocks);
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    const int c = assignment[i];
    U(static_cast<Eigen::Index>(i), c) = 1.0 / std::sqrt(static_cast<double>(sizes[static_cast<std::size_t>(c)]));
  }
  return U;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ULL);
  h = mix64(h ^ (a + 0x632be59bd9b4e019ULL));
  h = mix64(h ^ (b + 0x8cb92ba72f3d8dd7ULL));
  return h;
}

PiecewiseConstantIntensity::PiecewiseConstantIntensity(std::vector<double> breakpoints,
                                                       std::vector<double> values)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
  if (values_.size() != breakpoints_.size() + 1) {
    throw ParameterError("piecewise intensity needs one more value than breakpoints");
  }
  for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
    if (!(breakpoints_[i] > 0.0 && breakpoints_[i] < 1.0)) {
      throw ParameterError("breakpoints must lie strictly inside (0, 1)");
    }
    if (i > 0 && !(breakpoints_[i] > breakpoints_[i - 1])) {
      throw ParameterError("breakpoints must be strictly increasing");
    }
  }
  for (double v : values_) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ParameterError("intensity values must be >= 0");
  }
}

PiecewiseConstantIntensity PiecewiseConstantIntensity::constant(double rate) {
  return PiecewiseConstantIntensity({}, {rate});
}

double PiecewiseConstantIntensity::operator()(double t) const {
  const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
  return values_[static_cast<std::size_t>(it - breakpoints_.begin())];
}

double PiecewiseConstantIntensity::integral(double lo, double hi) const {
  double total = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const double a = std::max(lo, segment_lo(i));
    const double b = std::min(hi, segment_hi(i));
    if (b > a) total += values_[i] * (b - a);
  }
  return total;
}

double PiecewiseConstantIntensity::max_value() const {
  return *std::max_element(values_.begin(), values_.end());
}

std::span<const std::pair<double, double>> er_blocks_steps() { return kErBlocksSteps; }

double er_blocks_raw(double t) {
  double value = 0.0;
  for (const auto& [tk, hk] : kErBlocksSteps) {
    if (tk <= t) value += hk;
  }
  return value;
}

PiecewiseConstantIntensity er_blocks_intensity(double scale, double offset) {
  if (!(scale > 0.0)) throw ParameterError("ER-blocks scale must be positive");
  if (!(offset >= 0.0)) throw ParameterError("ER-blocks offset must be non-negative");
  std::vector<double> breakpoints;
  std::vector<double> values{std::max(offset, 0.0)};
  double raw = 0.0;
  for (const auto& [tk, hk] : kErBlocksSteps) {
    raw += hk;
    breakpoints.push_back(tk);
    values.push_back(std::max(scale * raw + offset, 0.0));
  }
  return PiecewiseConstantIntensity(std::move(breakpoints), std::move(values));
}

const PiecewiseConstantIntensity& GroundTruth::pair_intensity(NodeId u, NodeId v) const {
  const int cu = assignment.at(static_cast<std::size_t>(u));
  const int cv = assignment.at(static_cast<std::size_t>(v));
  return block_rates.at(static_cast<std::size_t>(cu * blocks + cv));
}

Eigen::MatrixXd GroundTruth::affinity_measure(double lo, double hi) const {
  std::vector<double> sizes(static_cast<std::size_t>(blocks), 0.0);
  for (int c : assignment) sizes[static_cast<std::size_t>(c)] += 1.0;
  Eigen::MatrixXd S(blocks, blocks);
  for (int p = 0; p < blocks; ++p) {
    for (int q = 0; q < blocks; ++q) {
      S(p, q) = block_rates[static_cast<std::size_t>(p * blocks + q)].integral(lo, hi) *
                std::sqrt(sizes[static_cast<std::size_t>(p)] * sizes[static_cast<std::size_t>(q)]);
    }
  }
  return S;
}

Eigen::MatrixXd GroundTruth::intensity_measure(double lo, double hi) const {
  Eigen::MatrixXd L(n_nodes, n_nodes);
  for (NodeId u = 0; u < n_nodes; ++u) {
    for (NodeId v = 0; v < n_nodes; ++v) L(u, v) = pair_intensity(u, v).integral(lo, hi);
  }
  return L;
}

PairEvaluator evaluator(const GroundTruth& truth) {
  auto shared = std::make_shared<const GroundTruth>(truth);
  return [shared](double t, std::span<const NodePair> pairs, std::span<double> out) {
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      out[i] = shared->pair_intensity(pairs[i].u, pairs[i].v)(t);
    }
  };
}

GroundTruth er_blocks_ground_truth(NodeId n_nodes, double scale, double offset) {
  if (n_nodes < 1) throw ParameterError("n_nodes must be positive");
  GroundTruth truth;
  truth.model = "er_blocks";
  truth.n_nodes = n_nodes;
  truth.assignment.assign(static_cast<std::size_t>(n_nodes), 0);
  truth.blocks = 1;
  truth.block_rates = {er_blocks_intensity(scale, offset)};
  truth.U_true = indicator_subspace(truth.assignment, 1);
  return truth;
}

GroundTruth dsbm_ground_truth(NodeId n_nodes, double lambda_intra, double lambda_inter,
                              double merge_lo, double merge_hi) {
  if (n_nodes < 2 || n_nodes % 2 != 0) throw ParameterError("DSBM needs an even n_nodes >= 2");
  if (!(lambda_inter >= 0.0) || !(lambda_intra >= lambda_inter)) {
    throw ParameterError("DSBM needs lambda_intra >= lambda_inter >= 0");
  }
  if (!(merge_lo >= 0.0 && merge_lo < merge_hi && merge_hi <= 1.0)) {
    throw ParameterError("merge interval must satisfy 0 <= lo < hi <= 1");
  }
  std::vector<double> breakpoints;
  std::vector<double> values;
  if (merge_lo > 0.0) {
    values.push_back(lambda_intra);
    breakpoints.push_back(merge_lo);
  }
  values.push_back(lambda_inter);
  if (merge_hi < 1.0) {
    breakpoints.push_back(merge_hi);
    values.push_back(lambda_intra);
  }
  const PiecewiseConstantIntensity intra(std::move(breakpoints), std::move(values));
  const auto inter = PiecewiseConstantIntensity::constant(lambda_inter);

  GroundTruth truth;
  truth.model = "dsbm";
  truth.n_nodes = n_nodes;
  truth.blocks = 2;
  truth.assignment.resize(static_cast<std::size_t>(n_nodes));
  for (NodeId i = 0; i < n_nodes; ++i) truth.assignment[static_cast<std::size_t>(i)] = i < n_nodes / 2 ? 0 : 1;
  truth.block_rates = {intra, inter, inter, intra};
  truth.U_true = indicator_subspace(truth.assignment, 2);
  return truth;
}

std::vector<double> sample_piecewise(const PiecewiseConstantIntensity& intensity, SplitMix64& rng) {
  std::vector<double> out;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < intensity.segments(); ++i) {
    const double lo = intensity.segment_lo(i);
    const double width = intensity.segment_hi(i) - lo;
    const double mean = intensity.values()[i] * width;
    if (!(mean > 0.0)) continue;
    std::poisson_distribution<long long> count(mean);
    const long long n = count(rng);
    for (long long k = 0; k < n; ++k) out.push_back(lo + width * unit(rng));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> sample_piecewise(const PiecewiseConstantIntensity& intensity,
                                     std::uint64_t seed) {
  SplitMix64 rng(seed);
  return sample_piecewise(intensity, rng);
}

std::vector<double> sample_thinning(const std::function<double(double)>& intensity, double bound,
                                    std::uint64_t seed) {
  if (!(bound >= 0.0) || !std::isfinite(bound)) throw ParameterError("bound must be finite and >= 0");
  std::vector<double> out;
  if (bound == 0.0) return out;
  SplitMix64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::poisson_distribution<long long> count(bound);
  const long long n = count(rng);
  std::vector<double> candidates(static_cast<std::size_t>(n));
  for (auto& t : candidates) t = unit(rng);
  std::sort(candidates.begin(), candidates.end());
  for (double t : candidates) {
    const double rate = intensity(t);
    if (rate > bound || rate < 0.0) {
      throw ParameterError("intensity " + std::to_string(rate) + " at t = " + std::to_string(t) +
                           " violates the bound " + std::to_string(bound));
    }
    if (unit(rng) * bound < rate) out.push_back(t);
  }
  return out;
}

EventStream generate_network(const GroundTruth& truth, std::uint64_t seed) {
  std::vector<Event> events;
  for (NodeId u = 0; u < truth.n_nodes; ++u) {
    for (NodeId v = 0; v < truth.n_nodes; ++v) {
      if (u == v) continue;
      SplitMix64 rng(derive_seed(seed, static_cast<std::uint64_t>(u), static_cast<std::uint64_t>(v)));
      for (double t : sample_piecewise(truth.pair_intensity(u, v), rng)) events.push_back({u, v, t});
    }
  }
  return EventStream(truth.n_nodes, 1.0, std::move(events), Directedness::directed);
}

GeneratorConfig generator_config_from_json(std::string_view json) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("generator config: ") + e.what());
  }
  if (!doc.is_object()) throw ParameterError("generator config must be a JSON object");
  GeneratorConfig c;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "model") {
        c.model = value.get<std::string>();
      } else if (key == "n_nodes") {
        c.n_nodes = value.get<NodeId>();
      } else if (key == "seed") {
        c.seed = value.get<std::uint64_t>();
      } else if (key == "params") {
        for (const auto& [pk, pv] : value.items()) {
          if (pk == "scale") c.scale = pv.get<double>();
          else if (pk == "offset") c.offset = pv.get<double>();
          else if (pk == "lambda_intra") c.lambda_intra = pv.get<double>();
          else if (pk == "lambda_inter") c.lambda_inter = pv.get<double>();
          else if (pk == "merge") {
            const auto m = pv.get<std::vector<double>>();
            if (m.size() != 2) throw ParameterError("params.merge must be [lo, hi]");
            c.merge_lo = m[0];
            c.merge_hi = m[1];
          } else {
            throw ParameterError("unknown generator parameter '" + pk + "'");
          }
        }
      } else {
        throw ParameterError("unknown generator config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("generator config: ") + e.what());
  }
  if (c.model != "er_blocks" && c.model != "dsbm") {
    throw ParameterError("model must be 'er_blocks' or 'dsbm'");
  }
  if (c.n_nodes < 1) throw ParameterError("n_nodes must be positive");
  return c;
}

std::string generator_config_to_json(const GeneratorConfig& c) {
  nlohmann::ordered_json doc;
  doc["model"] = c.model;
  doc["n_nodes"] = c.n_nodes;
  doc["seed"] = c.seed;
  nlohmann::ordered_json params;
  if (c.model == "er_blocks") {
    params["scale"] = c.scale;
    params["offset"] = c.offset;
  } else {
    params["lambda_intra"] = c.lambda_intra;
    params["lambda_inter"] = c.lambda_inter;
    params["merge"] = {c.merge_lo, c.merge_hi};
  }
  doc["params"] = params;
  return doc.dump(2);
}

GroundTruth make_ground_truth(const GeneratorConfig& c) {
  if (c.model == "er_blocks") return er_blocks_ground_truth(c.n_nodes, c.scale, c.offset);
  return dsbm_ground_truth(c.n_nodes, c.lambda_intra, c.lambda_inter, c.merge_lo, c.merge_hi);
}

std::string truth_to_json(const GroundTruth& truth) {
  nlohmann::ordered_json doc;
  doc["model"] = truth.model;
  doc["n_nodes"] = truth.n_nodes;
  doc["blocks"] = truth.blocks;
  doc["assignment"] = truth.assignment;
  nlohmann::json rates = nlohmann::json::array();
  for (const auto& r : truth.block_rates) {
    nlohmann::json entry;
    entry["breakpoints"] = r.breakpoints();
    entry["values"] = r.values();
    rates.push_back(entry);
  }
  doc["block_rates"] = rates;
  return doc.dump(2);
}

GroundTruth truth_from_json(std::string_view json) {
  try {
    const auto doc = nlohmann::json::parse(json);
    GroundTruth truth;
    truth.model = doc.at("model").get<std::string>();
    truth.n_nodes = doc.at("n_nodes").get<NodeId>();
    truth.blocks = doc.at("blocks").get<int>();
    truth.assignment = doc.at("assignment").get<std::vector<int>>();
    if (truth.blocks < 1 || static_cast<NodeId>(truth.assignment.size()) != truth.n_nodes) {
      throw ValidationError("truth: assignment size does not match n_nodes");
    }
    for (int c : truth.assignment) {
      if (c < 0 || c >= truth.blocks) throw ValidationError("truth: community label out of range");
    }
    for (const auto& r : doc.at("block_rates")) {
      truth.block_rates.emplace_back(r.at("breakpoints").get<std::vector<double>>(),
                                     r.at("values").get<std::vector<double>>());
    }
    if (static_cast<int>(truth.block_rates.size()) != truth.blocks * truth.blocks) {
      throw ValidationError("truth: block_rates must hold blocks^2 entries");
    }
    truth.U_true = indicator_subspace(truth.assignment, truth.blocks);
    return truth;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("truth document: ") + e.what());
  } catch (const ParameterError& e) {
    throw ValidationError(std::string("truth document: ") + e.what());
  }
}

}  // namespace anie
