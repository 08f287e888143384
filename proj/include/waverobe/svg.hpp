#pragma once

#include <string>
#include <vector>

#include "waverobe/mc_harness.hpp"
#include "waverobe/robust_scale.hpp"

namespace waverobe {

/// One point of a scale diagram: log2 of a scale estimate at scale j.
struct ScalePoint {
  EstimatorKind kind = EstimatorKind::cl;
  int j = 1;
  double log2_value = 0.0;
};

/// One rung of a confidence-interval ladder.
struct LadderRung {
  EstimatorKind kind = EstimatorKind::cl;
  int j0 = 1;
  double d_hat = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// log2 sigma^2_j against j, one polyline per kind.
std::string scale_diagram_svg(const std::vector<ScalePoint>& points, const std::string& title);

/// Per J0, the intervals of each kind side by side.
std::string ci_ladder_svg(const std::vector<LadderRung>& rungs, const std::string& title);

/// Kernel densities of the standardized errors at one d; clean and
/// contaminated curves in separate panels when both are present.
std::string density_svg(const std::vector<Density>& densities, const std::string& title);

}  // namespace waverobe
