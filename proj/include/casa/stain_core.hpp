#pragma once

#include <vector>

#include "casa/types.hpp"

namespace casa {

// Knobs of the Macenko estimator. The defaults are the values commonly used
// for H&E material.
struct MacenkoParams {
  double od_threshold = 0.15;     // tissue filter on max-channel OD
  double angle_percentile = 1.0;  // robust-extreme percentile, in percent
  int min_tissue_pixels = 50;
};

struct MacenkoResult {
  StainMatrix stains;
  ConcentrationMap concentrations;  // for all pixels, tissue or not
};

// OD = -ln(max(I, eps)/I0), clamped to [0, kOdMax].
OdImage rgb_to_od(const RgbImage& image);

// I = i0 * exp(-OD), clamped to [0, 1].
RgbImage od_to_rgb(const OdImage& od, double i0);

// Per-pixel least squares OD ~ W h via the 2x2 normal equations; negative
// coefficients are clamped to zero.
ConcentrationMap solve_concentrations(const OdImage& od, const StainMatrix& w);

// Beer-Lambert forward model I = i0 * exp(-W h), clamped to [0, 1].
RgbImage reconstruct(const StainMatrix& w, const ConcentrationMap& h, double i0,
                     int width, int height);

// Estimates the stain basis from the angular extremes of tissue OD pixels
// projected onto their principal plane, then solves concentrations for every
// pixel. Throws NoTissue / DegenerateStains.
MacenkoResult macenko_decompose(const RgbImage& image,
                                const MacenkoParams& params = {});

namespace detail {

// Forward model on a raw (not necessarily unit-norm) 3x2 matrix. Used by the
// finite-difference oracle, which probes matrix entries off the sphere.
RgbImage reconstruct_raw(const std::array<Vec3, 2>& columns,
                         const ConcentrationMap& h, double i0, int width,
                         int height);

// ceil(level*n)-th order statistic, 1-indexed; level 0 returns the minimum.
// Shared convention for every quantile in the project.
double order_statistic(std::vector<double> values, double level);

}  // namespace detail

}  // namespace casa
