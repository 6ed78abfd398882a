#pragma once

#include "caai/surrogates/forest.hpp"
#include "caai/surrogates/kriging.hpp"

#include <cstdint>
#include <memory>
#include <string_view>

namespace caai::surrogates {

enum class Algorithm { kriging, random_forest };

std::string_view to_string(Algorithm a);
/// "kriging" or "random-forest".
Algorithm parse_algorithm(std::string_view name);

struct ModelSetup {
  Algorithm algorithm = Algorithm::kriging;
  KrigingOptions kriging;
  ForestOptions forest;
};

struct FittedModel {
  std::shared_ptr<const Surrogate> model;
  FitReport report;
};

/// Fits the configured algorithm. `seed` replaces the forest's bootstrap seed.
FittedModel fit_surrogate(const Dataset& data, const ModelSetup& setup, std::uint64_t seed);

}  // namespace caai::surrogates
