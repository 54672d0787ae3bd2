#pragma once

#include <random>

#include "casa/calibration.hpp"
#include "casa/types.hpp"

namespace casa {

// Margin keeping (1 + delta_h) strictly positive when tau_h >= 1.
inline constexpr double kDeltaHMargin = 1e-3;

// A stain-space perturbation: ambient additive offsets to the reference
// columns plus per-channel multiplicative concentration offsets. delta_h is
// per image, broadcast over pixels.
struct StainPerturbation {
  std::array<Vec3, 2> delta_w{{{0, 0, 0}, {0, 0, 0}}};
  Vec2 delta_h{0.0, 0.0};

  bool is_zero() const {
    for (const Vec3& c : delta_w)
      for (double v : c)
        if (v != 0.0) return false;
    return delta_h[0] == 0.0 && delta_h[1] == 0.0;
  }
};

// normalize(w_ref_k + delta_w_k) per column, negatives clamped to zero and
// renormalized. delta_w of exactly zero leaves the reference column bitwise
// untouched.
StainMatrix perturbed_matrix(const StainMatrix& w_ref,
                             const std::array<Vec3, 2>& delta_w);

// Geodesic projection of a unit vector onto the spherical cap of half-angle
// tau_w around w_ref_col.
Vec3 project_cap(const Vec3& w_ref_col, const Vec3& v, double tau_w);

// Box clamp of the concentration offsets. Both modes use the box
// [max(-1 + margin, -tau_h), tau_h]; the final flag exists because the final
// perturbation must also satisfy |delta_h| <= tau_h, which the shared box
// already enforces.
Vec2 project_delta_h(const Vec2& delta_h, double tau_h, bool final_mode);

// Feasibility predicate of the perturbation against a budget.
bool perturbation_feasible(const StainPerturbation& pert,
                           const StainMatrix& w_ref, const StainBudget& budget);

// I = i0 * exp(-(perturbed W) (h0 * (1 + delta_h))). Bit-identical to
// reconstruct() for a zero perturbation.
RgbImage apply_perturbation(const StainMatrix& w_ref, const ConcentrationMap& h0,
                            const StainPerturbation& pert, double i0, int width,
                            int height);

// Random feasible perturbation: uniform rotation angle on [0, tau_w] toward a
// uniform tangent direction per column, uniform delta_h on the feasible box.
StainPerturbation sample_random_perturbation(const StainMatrix& w_ref,
                                             const StainBudget& budget,
                                             std::mt19937_64& rng);

}  // namespace casa
