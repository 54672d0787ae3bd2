#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "casa/errors.hpp"

namespace casa {

using Vec2 = std::array<double, 2>;
using Vec3 = std::array<double, 3>;

// Intensity floor applied before the log in the Beer-Lambert transform.
inline constexpr double kIntensityFloor = 1e-6;
// Ceiling for optical density values; bounds the OD of near-black pixels.
inline constexpr double kOdMax = 16.0;
// Unit-norm tolerance for stain matrix columns.
inline constexpr double kUnitNormTol = 1e-9;
// Minimum angle between stain columns before the matrix counts as degenerate.
inline constexpr double kMinColumnAngle = 1e-3;

inline double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

inline Vec3 add(const Vec3& a, const Vec3& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

inline Vec3 sub(const Vec3& a, const Vec3& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

inline Vec3 scale(const Vec3& a, double s) {
  return {a[0] * s, a[1] * s, a[2] * s};
}

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

inline Vec3 normalized(const Vec3& a) {
  double n = norm(a);
  return {a[0] / n, a[1] / n, a[2] / n};
}

// Angle between two vectors, robust to rounding at +/-1.
inline double angle_between(const Vec3& a, const Vec3& b) {
  double c = dot(a, b) / (norm(a) * norm(b));
  return std::acos(std::clamp(c, -1.0, 1.0));
}

// 8-bit-backed RGB image in normalized [0,1] intensities, interleaved
// channels. i0 is the background (incident light) intensity of the
// Beer-Lambert model.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // 3 * width * height, RGB interleaved
  double i0 = 1.0;

  int pixel_count() const { return width * height; }
  double at(int pixel, int channel) const { return data[3 * pixel + channel]; }
  double& at(int pixel, int channel) { return data[3 * pixel + channel]; }
};

inline RgbImage make_rgb_image(int width, int height, double fill = 1.0,
                               double i0 = 1.0) {
  RgbImage img;
  img.width = width;
  img.height = height;
  img.data.assign(static_cast<std::size_t>(3) * width * height, fill);
  img.i0 = i0;
  return img;
}

// Per-pixel optical densities (non-negative absorbances), same layout as
// RgbImage.
struct OdImage {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  int pixel_count() const { return width * height; }
  double at(int pixel, int channel) const { return data[3 * pixel + channel]; }
  double& at(int pixel, int channel) { return data[3 * pixel + channel]; }
};

// 3x2 stain basis. Column 0 is hematoxylin, column 1 eosin; columns are
// unit-norm with non-negative components.
struct StainMatrix {
  std::array<Vec3, 2> cols{};

  const Vec3& column(int k) const { return cols[static_cast<std::size_t>(k)]; }
  Vec3& column(int k) { return cols[static_cast<std::size_t>(k)]; }
};

// 2 x n_pixels stain concentrations, row 0 hematoxylin, row 1 eosin.
struct ConcentrationMap {
  int n_pixels = 0;
  std::vector<double> data;  // 2 * n_pixels, row-major

  double at(int channel, int pixel) const {
    return data[static_cast<std::size_t>(channel) * n_pixels + pixel];
  }
  double& at(int channel, int pixel) {
    return data[static_cast<std::size_t>(channel) * n_pixels + pixel];
  }
};

inline ConcentrationMap make_concentration_map(int n_pixels, double fill = 0.0) {
  ConcentrationMap m;
  m.n_pixels = n_pixels;
  m.data.assign(static_cast<std::size_t>(2) * n_pixels, fill);
  return m;
}

inline void validate_rgb_image(const RgbImage& image) {
  if (image.width < 1 || image.height < 1)
    raise(errc::invalid_config, "image must have at least one pixel");
  if (image.data.size() != static_cast<std::size_t>(3) * image.pixel_count())
    raise(errc::dimension_mismatch, "image buffer does not match dimensions");
  for (double v : image.data)
    if (!(v >= 0.0 && v <= 1.0))
      raise(errc::invalid_config, "image intensity outside [0,1]");
}

inline void validate_stain_matrix(const StainMatrix& w) {
  for (int k = 0; k < 2; ++k) {
    const Vec3& c = w.column(k);
    if (std::abs(norm(c) - 1.0) > kUnitNormTol)
      raise(errc::degenerate_stains, "stain column is not unit norm");
    for (double v : c)
      if (v < 0.0)
        raise(errc::degenerate_stains, "stain column has a negative component");
  }
  if (angle_between(w.column(0), w.column(1)) < kMinColumnAngle)
    raise(errc::degenerate_stains, "stain columns are nearly parallel");
}

}  // namespace casa
