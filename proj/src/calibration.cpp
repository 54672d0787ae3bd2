#include "casa/calibration.hpp"

#include <algorithm>
#include <cmath>

#include "casa/stain_core.hpp"

namespace casa {

StainMatrix mean_stain_matrix(const std::vector<StainMatrix>& matrices) {
  if (matrices.empty()) raise(errc::empty_input, "no stain matrices to average");
  StainMatrix mean;
  for (int k = 0; k < 2; ++k) {
    Vec3 acc{0, 0, 0};
    for (const StainMatrix& w : matrices) acc = add(acc, w.column(k));
    const double n = norm(acc);
    if (n < 1e-6 * static_cast<double>(matrices.size()))
      raise(errc::degenerate_mean, "mean stain column has near-zero norm");
    mean.column(k) = scale(acc, 1.0 / n);
  }
  if (angle_between(mean.column(0), mean.column(1)) < kMinColumnAngle)
    raise(errc::degenerate_mean, "mean stain columns are nearly parallel");
  return mean;
}

double angular_deviation(const StainMatrix& w, const StainMatrix& w_bar) {
  double worst = 0.0;
  for (int k = 0; k < 2; ++k)
    worst = std::max(worst, angle_between(w.column(k), w_bar.column(k)));
  return worst;
}

namespace {

double channel_q99(const ConcentrationMap& h, int channel) {
  std::vector<double> row(h.data.begin() + static_cast<std::ptrdiff_t>(channel) * h.n_pixels,
                          h.data.begin() + static_cast<std::ptrdiff_t>(channel + 1) * h.n_pixels);
  return detail::order_statistic(std::move(row), 0.99);
}

}  // namespace

Vec2 concentration_ratio(const ConcentrationMap& h, const Vec2& corpus_q99) {
  if (h.n_pixels < 1) raise(errc::empty_map, "concentration map is empty");
  if (corpus_q99[0] <= 0.0 || corpus_q99[1] <= 0.0)
    raise(errc::invalid_config, "corpus q99 must be positive");
  return {channel_q99(h, 0) / corpus_q99[0], channel_q99(h, 1) / corpus_q99[1]};
}

double dkw_epsilon(std::int64_t n, double beta) {
  if (!(beta > 0.0 && beta < 1.0))
    raise(errc::invalid_beta, "beta must lie in (0,1)");
  if (n < 1) raise(errc::empty_input, "sample count must be at least 1");
  return std::sqrt(std::log(4.0 / beta) / (2.0 * static_cast<double>(n)));
}

double empirical_quantile(const std::vector<double>& samples, double level) {
  return detail::order_statistic(samples, level);
}

CalibrationResult calibrate(const std::vector<StainMatrix>& matrices,
                            const std::vector<ConcentrationMap>& maps,
                            double delta, double beta,
                            const std::vector<std::string>* image_ids) {
  const std::size_t n = matrices.size();
  if (n < 2) raise(errc::empty_input, "calibration needs at least 2 images");
  if (maps.size() != n)
    raise(errc::dimension_mismatch, "matrices and maps differ in length");
  if (!(delta > 0.0 && delta < 1.0))
    raise(errc::invalid_config, "delta must lie in (0,1)");

  CalibrationResult result;
  result.mean_stains = mean_stain_matrix(matrices);

  // Corpus reference: per-channel mean over images of the per-image q99.
  std::vector<Vec2> q99(n);
  Vec2 corpus{0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    if (maps[i].n_pixels < 1) raise(errc::empty_map, "empty concentration map");
    q99[i] = {channel_q99(maps[i], 0), channel_q99(maps[i], 1)};
    corpus[0] += q99[i][0];
    corpus[1] += q99[i][1];
  }
  corpus[0] /= static_cast<double>(n);
  corpus[1] /= static_cast<double>(n);
  if (corpus[0] <= 0.0 || corpus[1] <= 0.0)
    raise(errc::invalid_config, "corpus q99 must be positive");
  result.corpus_q99 = corpus;

  std::vector<double> alphas(n);
  std::vector<double> devs(n);
  result.stats.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    ImageStainStats& s = result.stats[i];
    s.image_id = image_ids ? (*image_ids)[i] : std::to_string(i);
    s.alpha = angular_deviation(matrices[i], result.mean_stains);
    s.r = {q99[i][0] / corpus[0], q99[i][1] / corpus[1]};
    alphas[i] = s.alpha;
    devs[i] = std::max(std::abs(s.r[0] - 1.0), std::abs(s.r[1] - 1.0));
  }

  StainBudget& b = result.budget;
  b.n = static_cast<std::int64_t>(n);
  b.delta = delta;
  b.beta = beta;
  b.epsilon_n = dkw_epsilon(b.n, beta);
  b.quantile_level = std::min(1.0, 1.0 - delta + b.epsilon_n);
  b.tau_w = empirical_quantile(alphas, b.quantile_level);
  b.tau_h = empirical_quantile(devs, b.quantile_level);
  return result;
}

}  // namespace casa
