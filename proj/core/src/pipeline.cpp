#include "anie/pipeline.hpp"

namespace anie {

FitResult fit(const EventStream& stream, const BasisSet& basis, const FitOptions& options) {
  FitResult result;
  result.coeffs = project(stream, basis, options.project);
  SvdOptions svd;
  svd.rank = options.rank;
  svd.seed = options.seed;
  svd.scree_count = options.scree_count;
  result.sub = truncated_svd(result.coeffs, svd);
  result.affinity = estimate_affinity(result.coeffs, result.sub, basis, options.alpha);
  return result;
}

IntensityModel fit_model(const EventStream& stream, const BasisSet& basis,
                         const FitOptions& options) {
  FitResult r = fit(stream, basis, options);
  return IntensityModel(std::move(r.sub), std::move(r.affinity), basis);
}

}  // namespace anie
