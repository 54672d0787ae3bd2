#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "casa/types.hpp"

namespace casa {

// Per-image deviation statistics relative to the corpus.
struct ImageStainStats {
  std::string image_id;
  double alpha = 0.0;  // angular deviation from the corpus mean, radians
  Vec2 r{1.0, 1.0};    // per-channel q99 concentration ratios
};

// Calibrated perturbation budget plus the metadata that produced it.
struct StainBudget {
  double tau_w = 0.0;  // radians
  double tau_h = 0.0;
  std::int64_t n = 0;
  double delta = 0.0;
  double beta = 0.0;
  double epsilon_n = 0.0;
  double quantile_level = 0.0;  // min(1, 1 - delta + epsilon_n)
};

struct CalibrationResult {
  StainBudget budget;
  std::vector<ImageStainStats> stats;
  StainMatrix mean_stains;
  Vec2 corpus_q99{0.0, 0.0};
};

// Column-wise mean of the input columns, renormalized. Throws DegenerateMean
// if a mean column collapses or the means become parallel.
StainMatrix mean_stain_matrix(const std::vector<StainMatrix>& matrices);

// max over the two columns of the angle between corresponding columns.
double angular_deviation(const StainMatrix& w, const StainMatrix& w_bar);

// Per-channel ratio of this image's 99th-percentile concentration to the
// corpus reference.
Vec2 concentration_ratio(const ConcentrationMap& h, const Vec2& corpus_q99);

// DKW correction at union-bound level beta/2: sqrt(ln(4/beta) / (2n)).
double dkw_epsilon(std::int64_t n, double beta);

// ceil(level*n)-th order statistic (1-indexed) of the samples.
double empirical_quantile(const std::vector<double>& samples, double level);

// Full budget estimation: mean stain matrix, per-image angular deviations and
// concentration ratios, then DKW-corrected empirical quantiles.
CalibrationResult calibrate(const std::vector<StainMatrix>& matrices,
                            const std::vector<ConcentrationMap>& maps,
                            double delta, double beta,
                            const std::vector<std::string>* image_ids = nullptr);

}  // namespace casa
