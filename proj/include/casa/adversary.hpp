#pragma once

#include <cstdint>
#include <vector>

#include "casa/perturbation.hpp"
#include "casa/types.hpp"

namespace casa {

// Contract a classifier must satisfy to drive the inner maximization: a
// scalar loss and its gradient with respect to the input pixels. Both calls
// are read-only and safe to invoke concurrently.
class DifferentiableModel {
 public:
  virtual ~DifferentiableModel() = default;
  virtual double loss(const RgbImage& image, int label) const = 0;
  // Gradient of loss w.r.t. pixel intensities, same layout as RgbImage::data.
  virtual std::vector<double> input_gradient(const RgbImage& image,
                                             int label) const = 0;
};

struct PgdConfig {
  int k_steps = 5;
  double step_w = 0.0;  // radians per step; <= 0 picks 2.5 * tau_w / k
  double step_h = 0.0;  // <= 0 picks 2.5 * tau_h / k
  enum class Init { zero, random };
  Init init = Init::zero;
  std::uint64_t seed = 0;
};

struct AttackResult {
  StainPerturbation perturbation;     // best iterate, final-mode feasible
  std::vector<double> loss_trajectory;  // k_steps + 1 values, init first
  RgbImage adversarial_image;
};

// Gradient of the loss w.r.t. the entries of the perturbed stain matrix and
// w.r.t. delta_h, given the model's pixel gradient. Pixels clamped at the
// [0,1] reconstruction boundary contribute zero.
struct PerturbationGrad {
  std::array<Vec3, 2> d_w{{{0, 0, 0}, {0, 0, 0}}};
  Vec2 d_h{0.0, 0.0};
};

PerturbationGrad grad_wrt_perturbation(const std::vector<double>& input_grad,
                                       const StainMatrix& w_pert,
                                       const ConcentrationMap& h0,
                                       const Vec2& delta_h, double i0);

// K-step projected gradient ascent on the stain perturbation; returns the
// iterate with the highest recorded loss.
AttackResult pgd_attack(const DifferentiableModel& model,
                        const StainMatrix& w_ref, const ConcentrationMap& h0,
                        int label, const StainBudget& budget,
                        const PgdConfig& config, double i0, int width,
                        int height);

// Central-difference oracle for the same gradients, probing the ambient
// matrix entries directly with all projections disengaged.
PerturbationGrad finite_diff_grad(const DifferentiableModel& model,
                                  const StainMatrix& w_ref,
                                  const ConcentrationMap& h0,
                                  const StainPerturbation& delta, int label,
                                  double i0, int width, int height,
                                  double fd_step);

}  // namespace casa
