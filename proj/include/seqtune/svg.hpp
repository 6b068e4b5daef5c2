#pragma once

#include <string>
#include <vector>

#include "seqtune/trainer.hpp"

namespace seqtune {

/// Hand-rolled SVG line chart: expected reward and KL to the prior against
/// log10(beta), each series on its own vertical scale.
std::string sweep_chart_svg(const std::vector<SweepRow>& rows);

}  // namespace seqtune
