#include "casa/stain_core.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace casa {

OdImage rgb_to_od(const RgbImage& image) {
  OdImage od;
  od.width = image.width;
  od.height = image.height;
  od.data.resize(image.data.size());
  const double i0 = image.i0;
  for (std::size_t i = 0; i < image.data.size(); ++i) {
    double v = -std::log(std::max(image.data[i], kIntensityFloor) / i0);
    od.data[i] = std::clamp(v, 0.0, kOdMax);
  }
  return od;
}

RgbImage od_to_rgb(const OdImage& od, double i0) {
  RgbImage img;
  img.width = od.width;
  img.height = od.height;
  img.i0 = i0;
  img.data.resize(od.data.size());
  for (std::size_t i = 0; i < od.data.size(); ++i)
    img.data[i] = std::clamp(i0 * std::exp(-od.data[i]), 0.0, 1.0);
  return img;
}

ConcentrationMap solve_concentrations(const OdImage& od, const StainMatrix& w) {
  const Vec3& wh = w.column(0);
  const Vec3& we = w.column(1);
  // Normal equations (W^T W) h = W^T od for a 3x2 W.
  const double a = dot(wh, wh);
  const double b = dot(wh, we);
  const double c = dot(we, we);
  const double det = a * c - b * b;
  if (det < 1e-12)
    raise(errc::singular_system, "stain columns are numerically parallel");

  const int n = od.pixel_count();
  ConcentrationMap h = make_concentration_map(n);
  for (int j = 0; j < n; ++j) {
    const double r0 = wh[0] * od.at(j, 0) + wh[1] * od.at(j, 1) + wh[2] * od.at(j, 2);
    const double r1 = we[0] * od.at(j, 0) + we[1] * od.at(j, 1) + we[2] * od.at(j, 2);
    h.at(0, j) = std::max((c * r0 - b * r1) / det, 0.0);
    h.at(1, j) = std::max((a * r1 - b * r0) / det, 0.0);
  }
  return h;
}

namespace detail {

RgbImage reconstruct_raw(const std::array<Vec3, 2>& columns,
                         const ConcentrationMap& h, double i0, int width,
                         int height) {
  if (h.n_pixels != width * height)
    raise(errc::dimension_mismatch, "concentration map does not match dims");
  RgbImage img = make_rgb_image(width, height, 0.0, i0);
  const int n = h.n_pixels;
  for (int j = 0; j < n; ++j) {
    const double h0 = h.at(0, j);
    const double h1 = h.at(1, j);
    for (int c = 0; c < 3; ++c) {
      double od = columns[0][c] * h0 + columns[1][c] * h1;
      img.at(j, c) = std::clamp(i0 * std::exp(-od), 0.0, 1.0);
    }
  }
  return img;
}

double order_statistic(std::vector<double> values, double level) {
  if (values.empty()) raise(errc::empty_input, "no samples for quantile");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto rank = static_cast<std::ptrdiff_t>(std::ceil(level * n));
  rank = std::clamp<std::ptrdiff_t>(rank, 1, values.size());
  return values[static_cast<std::size_t>(rank - 1)];
}

}  // namespace detail

RgbImage reconstruct(const StainMatrix& w, const ConcentrationMap& h, double i0,
                     int width, int height) {
  return detail::reconstruct_raw(w.cols, h, i0, width, height);
}

namespace {

// Deterministic sign convention: largest-magnitude component positive.
Vec3 fix_eigvec_sign(const Vec3& v) {
  int arg = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
  return v[arg] < 0.0 ? scale(v, -1.0) : v;
}

// Flip so the component sum is non-negative, clamp stray negatives to zero,
// renormalize. Physical absorbances cannot be negative.
Vec3 to_stain_direction(const Vec3& v) {
  Vec3 u = (v[0] + v[1] + v[2] < 0.0) ? scale(v, -1.0) : v;
  for (double& x : u) x = std::max(x, 0.0);
  double n = norm(u);
  if (n < 1e-9)
    raise(errc::degenerate_stains, "stain direction collapsed to zero");
  return scale(u, 1.0 / n);
}

}  // namespace

MacenkoResult macenko_decompose(const RgbImage& image,
                                const MacenkoParams& params) {
  const OdImage od = rgb_to_od(image);
  const int n = od.pixel_count();

  std::vector<int> tissue;
  tissue.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    double m = std::max({od.at(j, 0), od.at(j, 1), od.at(j, 2)});
    if (m > params.od_threshold) tissue.push_back(j);
  }
  if (static_cast<int>(tissue.size()) < params.min_tissue_pixels)
    raise(errc::no_tissue, "only " + std::to_string(tissue.size()) +
                               " pixels above the OD threshold");

  // Covariance of tissue OD vectors, accumulated in fixed pixel order.
  Vec3 mean{0, 0, 0};
  for (int j : tissue)
    for (int c = 0; c < 3; ++c) mean[c] += od.at(j, c);
  const double inv = 1.0 / static_cast<double>(tissue.size());
  for (double& m : mean) m *= inv;

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (int j : tissue) {
    Vec3 d{od.at(j, 0) - mean[0], od.at(j, 1) - mean[1], od.at(j, 2) - mean[2]};
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) cov(r, c) += d[r] * d[c];
  }
  cov *= inv;

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  // Eigenvalues come back ascending; take the two principal directions.
  const auto evec = eig.eigenvectors();
  Vec3 e1 = fix_eigvec_sign({evec(0, 2), evec(1, 2), evec(2, 2)});
  Vec3 e2 = fix_eigvec_sign({evec(0, 1), evec(1, 1), evec(2, 1)});

  // Angles of tissue OD in the principal plane.
  std::vector<double> phis;
  phis.reserve(tissue.size());
  for (int j : tissue) {
    Vec3 v{od.at(j, 0), od.at(j, 1), od.at(j, 2)};
    phis.push_back(std::atan2(dot(v, e2), dot(v, e1)));
  }
  const double lo = params.angle_percentile / 100.0;
  const double phi_min = detail::order_statistic(phis, lo);
  const double phi_max = detail::order_statistic(phis, 1.0 - lo);

  Vec3 v_min = add(scale(e1, std::cos(phi_min)), scale(e2, std::sin(phi_min)));
  Vec3 v_max = add(scale(e1, std::cos(phi_max)), scale(e2, std::sin(phi_max)));
  Vec3 s0 = to_stain_direction(v_min);
  Vec3 s1 = to_stain_direction(v_max);

  if (angle_between(s0, s1) < kMinColumnAngle)
    raise(errc::degenerate_stains, "extreme stain directions coincide");

  // Hematoxylin absorbs more red: larger first component.
  StainMatrix w;
  if (s0[0] >= s1[0]) {
    w.cols = {s0, s1};
  } else {
    w.cols = {s1, s0};
  }

  return {w, solve_concentrations(od, w)};
}

}  // namespace casa
