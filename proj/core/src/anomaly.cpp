#include "anie/anomaly.hpp"

#include <cmath>

#include "anie/error.hpp"
#include "anie/io.hpp"

namespace anie {

double AnomalyProfile::at(int j, double t) const {
  if (j < 0 || j >= levels()) throw ParameterError("scale out of range");
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("t outside [0, 1]");
  const std::int64_t k = j == 0 ? 0 : haar_fine_cell(j - 1, t);
  return scores[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
}

double AnomalyProfile::summed(double t) const {
  double total = 0.0;
  for (int j = 0; j < levels(); ++j) total += at(j, t);
  return total;
}

AnomalyProfile multiscale_score(const AffinityResult& affinity, const BasisSet& basis,
                                ScoreSource source) {
  if (!basis.is_haar()) throw ParameterError("anomaly scores require a Haar basis");
  const auto& coeffs = source == ScoreSource::raw ? affinity.S_hat : affinity.S_thresh;
  if (static_cast<int>(coeffs.size()) != basis.size()) {
    throw ShapeError("affinity coefficients do not match the basis size");
  }
  AnomalyProfile profile;
  profile.source = source;
  for (int j = 0; j < basis.max_level(); ++j) {
    auto& level = profile.scores.emplace_back(static_cast<std::size_t>(std::int64_t{1} << j), 0.0);
    for (std::size_t k = 0; k < level.size(); ++k) {
      level[k] = coeffs[static_cast<std::size_t>(haar_index(j, static_cast<std::int64_t>(k)))]
                     .cwiseAbs()
                     .sum();
    }
  }
  return profile;
}

void save_anomaly_csv(const AnomalyProfile& profile, const std::filesystem::path& path) {
  std::string out = "scale,cell_index,t_start,t_end,score\n";
  for (int j = 0; j < profile.levels(); ++j) {
    const auto& level = profile.scores[static_cast<std::size_t>(j)];
    const double width = std::ldexp(1.0, -j);
    for (std::size_t k = 0; k < level.size(); ++k) {
      out += std::to_string(j) + "," + std::to_string(k) + "," +
             format_double(width * static_cast<double>(k)) + "," +
             format_double(width * static_cast<double>(k + 1)) + "," + format_double(level[k]) +
             "\n";
    }
  }
  write_file_atomic(path, out);
}

}  // namespace anie
