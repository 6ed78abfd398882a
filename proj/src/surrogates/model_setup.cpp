#include "caai/surrogates/model_setup.hpp"

#include <string>

namespace caai::surrogates {

std::string_view to_string(Algorithm a) {
  return a == Algorithm::kriging ? "kriging" : "random-forest";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "kriging") return Algorithm::kriging;
  if (name == "random-forest") return Algorithm::random_forest;
  throw SurrogateError("unknown algorithm '" + std::string(name) + "'");
}

FittedModel fit_surrogate(const Dataset& data, const ModelSetup& setup, std::uint64_t seed) {
  FittedModel out;
  if (setup.algorithm == Algorithm::kriging) {
    auto [model, report] = kriging_fit(data, setup.kriging);
    out.model = std::make_shared<KrigingModel>(std::move(model));
    out.report = report;
  } else {
    ForestOptions opts = setup.forest;
    opts.seed = seed;
    auto [model, report] = rf_fit(data, opts);
    out.model = std::make_shared<ForestModel>(std::move(model));
    out.report = report;
  }
  return out;
}

}  // namespace caai::surrogates
