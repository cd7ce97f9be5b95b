#pragma once

#include <string>
#include <vector>

#include "fcopf/harness.hpp"

namespace fcopf {

std::string report_table(const ComparisonReport& report);    // tab separated, header row
std::string report_summary(const ComparisonReport& report);  // JSON

// Line plot with the plotted points repeated in a comment block.
std::string frequency_svg(const PlotSeries& series, double threshold);
std::string rocof_svg(const PlotSeries& series, double threshold);

/// Writes table.tsv, summary.json and, per series, freq_<model>.svg and
/// rocof_<model>.svg into `dir`. Returns the written paths in order.
std::vector<std::string> emit_report(const ComparisonReport& report, const std::vector<PlotSeries>& plots,
                                     const std::string& dir);

}  // namespace fcopf
