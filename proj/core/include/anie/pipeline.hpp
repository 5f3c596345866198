#pragma once

#include <cstdint>

#include "anie/affinity.hpp"
#include "anie/basis.hpp"
#include "anie/coeffs.hpp"
#include "anie/events.hpp"
#include "anie/model.hpp"
#include "anie/subspace.hpp"

namespace anie {

struct FitOptions {
  int rank = 1;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  int scree_count = 0;
  ProjectOptions project;
};

struct FitResult {
  CoeffSet coeffs;
  SubspaceEstimate sub;
  AffinityResult affinity;
};

// Basis decomposition, rank-D subspace, affinity coefficients and
// statistical thresholding on a stream with timestamps in [0, 1].
FitResult fit(const EventStream& stream, const BasisSet& basis, const FitOptions& options);

IntensityModel fit_model(const EventStream& stream, const BasisSet& basis,
                         const FitOptions& options);

}  // namespace anie
