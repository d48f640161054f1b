#pragma once

#include "fint/autonomous.hpp"
#include "fint/system_spec.hpp"

namespace fint {

struct ReductionReport {
  double max_residual = 0.0;  // || g' - s'(t) B g + g A || over the grid
  double min_abs_det = 0.0;   // min |det g(t)| over the grid
  std::size_t grid_points = 0;
};

// Checks the transformation identity g' = s'(t) B g - g A on a 50-point
// grid (g' by central differences); s'(t) is 1, or 1/t for log-scaled
// reductions.
ReductionReport check_reduction(const SystemSpec& spec, double tol = 1e-8);

// Section-3 basis: the section-1 constructions of the reduced system's
// spectral data, with every linear form carrying the transform g(t).
BasisResult reducible_integrals(const SystemSpec& spec, double tol = 1e-8);

}  // namespace fint
