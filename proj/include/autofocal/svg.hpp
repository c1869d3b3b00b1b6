#pragma once

#include <string>
#include <vector>

namespace autofocal::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Static line chart with linear axes, tick labels and a legend.
std::string line_plot(const std::string& title, const std::string& x_label, const std::vector<Series>& series);

void write_line_plot(const std::string& path, const std::string& title, const std::string& x_label,
                     const std::vector<Series>& series);

}  // namespace autofocal::svg
