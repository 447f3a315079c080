#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "svgph/phmodel.hpp"

namespace svgph {

/// One sample of a closed-loop run. For 4-state runs x[4] is unused and H
/// equals H0.
struct StepRecord {
  double t = 0.0;
  std::array<double, 5> x{};
  ControlInput u{};
  Disturbance d{};
  double H = 0.0;
  double H0 = 0.0;
};

struct Trajectory {
  std::vector<StepRecord> records;
  std::size_t dim = 5;
  SystemParams params{};
  std::string controller;
  std::string stepper;
  double h = 0.0;
  double T = 0.0;

  bool empty() const noexcept { return records.empty(); }
  std::size_t size() const noexcept { return records.size(); }
};

}  // namespace svgph
