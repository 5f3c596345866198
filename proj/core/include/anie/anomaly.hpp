#pragma once

#include <filesystem>
#include <vector>

#include "anie/affinity.hpp"
#include "anie/basis.hpp"

namespace anie {

enum class ScoreSource { raw, thresholded };

// Per-scale anomaly scores: scores[j][k] = sum_{p,q} |S_pq(psi_{j,k})| on I_{j,k}.
struct AnomalyProfile {
  ScoreSource source = ScoreSource::thresholded;
  std::vector<std::vector<double>> scores;

  int levels() const noexcept { return static_cast<int>(scores.size()); }
  // Score of the level-j cell containing t (t = 1 in the last cell).
  double at(int j, double t) const;
  // Sum over all levels at time t.
  double summed(double t) const;
};

// Throws ParameterError for non-Haar bases.
AnomalyProfile multiscale_score(const AffinityResult& affinity, const BasisSet& basis,
                                ScoreSource source = ScoreSource::thresholded);

// `scale,cell_index,t_start,t_end,score`
void save_anomaly_csv(const AnomalyProfile& profile, const std::filesystem::path& path);

}  // namespace anie
