#pragma once

#include <string>

namespace caai::conceptual {

/// A vetted parameter change for the plant.
struct AdaptionCommand {
  std::string parameter = "x";
  double value = 0.0;
  int issuing_cycle = 0;
  std::string pipeline_id;
};

}  // namespace caai::conceptual
