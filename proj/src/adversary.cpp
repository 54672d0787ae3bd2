#include "casa/adversary.hpp"

#include <algorithm>
#include <cmath>

#include "casa/rng.hpp"
#include "casa/stain_core.hpp"

namespace casa {

PerturbationGrad grad_wrt_perturbation(const std::vector<double>& input_grad,
                                       const StainMatrix& w_pert,
                                       const ConcentrationMap& h0,
                                       const Vec2& delta_h, double i0) {
  const int n = h0.n_pixels;
  if (input_grad.size() != static_cast<std::size_t>(3) * n)
    raise(errc::dimension_mismatch, "gradient field does not match pixels");

  PerturbationGrad g;
  for (int j = 0; j < n; ++j) {
    const double hp0 = h0.at(0, j) * (1.0 + delta_h[0]);
    const double hp1 = h0.at(1, j) * (1.0 + delta_h[1]);
    for (int c = 0; c < 3; ++c) {
      const double od = w_pert.column(0)[c] * hp0 + w_pert.column(1)[c] * hp1;
      const double raw = i0 * std::exp(-od);
      if (raw > 1.0 || raw < 0.0) continue;  // clamped: zero subgradient
      const double gi = input_grad[static_cast<std::size_t>(3) * j + c] * -raw;
      g.d_w[0][c] += gi * hp0;
      g.d_w[1][c] += gi * hp1;
      g.d_h[0] += gi * w_pert.column(0)[c] * h0.at(0, j);
      g.d_h[1] += gi * w_pert.column(1)[c] * h0.at(1, j);
    }
  }
  return g;
}

namespace {

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

AttackResult pgd_attack(const DifferentiableModel& model,
                        const StainMatrix& w_ref, const ConcentrationMap& h0,
                        int label, const StainBudget& budget,
                        const PgdConfig& config, double i0, int width,
                        int height) {
  if (config.k_steps < 0) raise(errc::invalid_config, "k_steps must be >= 0");
  const int k = config.k_steps;
  const double step_w =
      config.step_w > 0.0 ? config.step_w
                          : (k > 0 ? 2.5 * budget.tau_w / k : 0.0);
  const double step_h =
      config.step_h > 0.0 ? config.step_h
                          : (k > 0 ? 2.5 * budget.tau_h / k : 0.0);

  StainPerturbation pert;
  if (config.init == PgdConfig::Init::random) {
    std::mt19937_64 rng = make_rng(config.seed);
    pert = sample_random_perturbation(w_ref, budget, rng);
    pert.delta_h = project_delta_h(pert.delta_h, budget.tau_h, false);
  }

  AttackResult best;
  best.loss_trajectory.reserve(static_cast<std::size_t>(k) + 1);
  double best_loss = 0.0;

  for (int step = 0;; ++step) {
    RgbImage img = apply_perturbation(w_ref, h0, pert, i0, width, height);
    const double loss = model.loss(img, label);
    best.loss_trajectory.push_back(loss);
    if (step == 0 || loss > best_loss) {
      best_loss = loss;
      best.perturbation = pert;
      best.adversarial_image = img;
    }
    if (step == k) break;

    const std::vector<double> gi = model.input_gradient(img, label);
    const StainMatrix w_cur = perturbed_matrix(w_ref, pert.delta_w);
    const PerturbationGrad g =
        grad_wrt_perturbation(gi, w_cur, h0, pert.delta_h, i0);

    // Steepest ascent along the sphere tangent, one geodesic step, then cap
    // projection; delta_w is re-expressed against the reference column.
    for (int col = 0; col < 2; ++col) {
      Vec3 v = normalized(add(w_ref.column(col), pert.delta_w[col]));
      Vec3 t = sub(g.d_w[col], scale(v, dot(g.d_w[col], v)));
      const double tn = norm(t);
      if (tn > 1e-15) {
        t = scale(t, 1.0 / tn);
        v = normalized(add(scale(v, std::cos(step_w)), scale(t, std::sin(step_w))));
      }
      v = project_cap(w_ref.column(col), v, budget.tau_w);
      pert.delta_w[col] = sub(v, w_ref.column(col));
    }
    pert.delta_h[0] += step_h * sign(g.d_h[0]);
    pert.delta_h[1] += step_h * sign(g.d_h[1]);
    pert.delta_h = project_delta_h(pert.delta_h, budget.tau_h, false);
  }

  best.perturbation.delta_h =
      project_delta_h(best.perturbation.delta_h, budget.tau_h, true);
  return best;
}

PerturbationGrad finite_diff_grad(const DifferentiableModel& model,
                                  const StainMatrix& w_ref,
                                  const ConcentrationMap& h0,
                                  const StainPerturbation& delta, int label,
                                  double i0, int width, int height,
                                  double fd_step) {
  const int n = h0.n_pixels;
  std::array<Vec3, 2> base = w_ref.cols;
  for (int k = 0; k < 2; ++k) base[k] = add(base[k], delta.delta_w[k]);

  const auto loss_at = [&](const std::array<Vec3, 2>& cols, const Vec2& dh) {
    ConcentrationMap h = h0;
    for (int k = 0; k < 2; ++k) {
      const double f = 1.0 + dh[static_cast<std::size_t>(k)];
      for (int j = 0; j < n; ++j) h.at(k, j) *= f;
    }
    return model.loss(detail::reconstruct_raw(cols, h, i0, width, height),
                      label);
  };

  PerturbationGrad g;
  for (int k = 0; k < 2; ++k) {
    for (int c = 0; c < 3; ++c) {
      std::array<Vec3, 2> plus = base;
      std::array<Vec3, 2> minus = base;
      plus[k][c] += fd_step;
      minus[k][c] -= fd_step;
      g.d_w[k][c] = (loss_at(plus, delta.delta_h) - loss_at(minus, delta.delta_h)) /
                    (2.0 * fd_step);
    }
    Vec2 plus = delta.delta_h;
    Vec2 minus = delta.delta_h;
    plus[static_cast<std::size_t>(k)] += fd_step;
    minus[static_cast<std::size_t>(k)] -= fd_step;
    g.d_h[static_cast<std::size_t>(k)] =
        (loss_at(base, plus) - loss_at(base, minus)) / (2.0 * fd_step);
  }
  return g;
}

}  // namespace casa
