#include "casa/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "casa/stain_core.hpp"

namespace casa {

StainMatrix perturbed_matrix(const StainMatrix& w_ref,
                             const std::array<Vec3, 2>& delta_w) {
  StainMatrix out;
  for (int k = 0; k < 2; ++k) {
    const Vec3& d = delta_w[static_cast<std::size_t>(k)];
    if (d[0] == 0.0 && d[1] == 0.0 && d[2] == 0.0) {
      out.column(k) = w_ref.column(k);
      continue;
    }
    Vec3 u = add(w_ref.column(k), d);
    double n = norm(u);
    if (n < 1e-9) raise(errc::null_column, "perturbed column has zero norm");
    u = scale(u, 1.0 / n);
    bool clipped = false;
    for (double& x : u)
      if (x < 0.0) {
        x = 0.0;
        clipped = true;
      }
    if (clipped) {
      n = norm(u);
      if (n < 1e-9)
        raise(errc::null_column, "perturbed column clamped to zero");
      u = scale(u, 1.0 / n);
    }
    out.column(k) = u;
  }
  return out;
}

Vec3 project_cap(const Vec3& w_ref_col, const Vec3& v, double tau_w) {
  const double theta = angle_between(w_ref_col, v);
  if (theta <= tau_w) return v;
  if (theta > std::numbers::pi - 1e-6)
    raise(errc::antipodal, "projection direction is undefined");
  // Geodesic point at angle tau_w in the plane spanned by the inputs.
  const double s = std::sin(theta);
  Vec3 p = add(scale(w_ref_col, std::sin(theta - tau_w) / s),
               scale(v, std::sin(tau_w) / s));
  return normalized(p);
}

Vec2 project_delta_h(const Vec2& delta_h, double tau_h, bool /*final_mode*/) {
  const double lo = std::max(-1.0 + kDeltaHMargin, -tau_h);
  return {std::clamp(delta_h[0], lo, tau_h), std::clamp(delta_h[1], lo, tau_h)};
}

bool perturbation_feasible(const StainPerturbation& pert,
                           const StainMatrix& w_ref, const StainBudget& budget) {
  const StainMatrix w = perturbed_matrix(w_ref, pert.delta_w);
  for (int k = 0; k < 2; ++k)
    if (angle_between(w.column(k), w_ref.column(k)) > budget.tau_w + 1e-9)
      return false;
  for (double d : pert.delta_h) {
    if (std::abs(d) > budget.tau_h + 1e-12) return false;
    if (d < -1.0 + kDeltaHMargin - 1e-12) return false;
  }
  return true;
}

RgbImage apply_perturbation(const StainMatrix& w_ref, const ConcentrationMap& h0,
                            const StainPerturbation& pert, double i0, int width,
                            int height) {
  const StainMatrix w = perturbed_matrix(w_ref, pert.delta_w);
  ConcentrationMap h = h0;
  const int n = h.n_pixels;
  for (int k = 0; k < 2; ++k) {
    const double f = 1.0 + pert.delta_h[static_cast<std::size_t>(k)];
    for (int j = 0; j < n; ++j) h.at(k, j) *= f;
  }
  return reconstruct(w, h, i0, width, height);
}

namespace {

// Uniform unit vector orthogonal to col.
Vec3 random_tangent(const Vec3& col, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (;;) {
    Vec3 g{gauss(rng), gauss(rng), gauss(rng)};
    Vec3 t = sub(g, scale(col, dot(g, col)));
    const double n = norm(t);
    if (n > 1e-9) return scale(t, 1.0 / n);
  }
}

}  // namespace

StainPerturbation sample_random_perturbation(const StainMatrix& w_ref,
                                             const StainBudget& budget,
                                             std::mt19937_64& rng) {
  StainPerturbation pert;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 2; ++k) {
    if (budget.tau_w <= 0.0) continue;
    const Vec3& col = w_ref.column(k);
    const Vec3 t = random_tangent(col, rng);
    const double phi = unit(rng) * budget.tau_w;
    Vec3 v = add(scale(col, std::cos(phi)), scale(t, std::sin(phi)));
    pert.delta_w[static_cast<std::size_t>(k)] = sub(v, col);
  }
  const double lo = -std::min(budget.tau_h, 1.0 - kDeltaHMargin);
  for (int k = 0; k < 2; ++k) {
    if (budget.tau_h <= 0.0) break;
    pert.delta_h[static_cast<std::size_t>(k)] =
        lo + unit(rng) * (budget.tau_h - lo);
  }
  return pert;
}

}  // namespace casa
