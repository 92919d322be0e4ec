#pragma once

#include "folomin/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace folomin::svg {

/// A labelled sample, e.g. the per-replication errors of one method.
struct Series {
  std::string label;
  std::vector<double> values;
};

/// One histogram per series, stacked vertically on a shared x range.
/// Non-finite values are skipped.
std::string histograms(const std::string& title, const std::vector<Series>& series, int bins = 25,
                       std::optional<double> reference = std::nullopt);

/// Dot strip per series with its mean marked; an optional horizontal
/// reference line (e.g. nominal coverage).
std::string strips(const std::string& title, const std::string& y_label,
                   const std::vector<Series>& series,
                   std::optional<double> reference = std::nullopt);

/// Cell-coloured matrix. Values are mapped linearly from [lo, hi] onto a
/// white-to-dark ramp; NaN cells are grey.
std::string heatmap(const std::string& title, const Matrix& values, double lo, double hi,
                    const std::vector<std::string>& column_labels = {});

}  // namespace folomin::svg
