#include "casa/toy_model.hpp"

#include <algorithm>
#include <cmath>

#include "casa/rng.hpp"

namespace casa {

namespace detail {

namespace {

struct Taps {
  int lo, hi;
  double w_lo, w_hi;
};

Taps taps_for(int out_coord, int out_size, int in_size) {
  double src = (out_coord + 0.5) * static_cast<double>(in_size) / out_size - 0.5;
  src = std::clamp(src, 0.0, static_cast<double>(in_size - 1));
  const int lo = static_cast<int>(std::floor(src));
  const int hi = std::min(lo + 1, in_size - 1);
  const double f = src - lo;
  return {lo, hi, 1.0 - f, f};
}

}  // namespace

std::vector<double> resample_bilinear(const RgbImage& image, int out_w,
                                      int out_h) {
  std::vector<double> out(static_cast<std::size_t>(3) * out_w * out_h);
  for (int oy = 0; oy < out_h; ++oy) {
    const Taps ty = taps_for(oy, out_h, image.height);
    for (int ox = 0; ox < out_w; ++ox) {
      const Taps tx = taps_for(ox, out_w, image.width);
      for (int c = 0; c < 3; ++c) {
        const double v =
            ty.w_lo * (tx.w_lo * image.at(ty.lo * image.width + tx.lo, c) +
                       tx.w_hi * image.at(ty.lo * image.width + tx.hi, c)) +
            ty.w_hi * (tx.w_lo * image.at(ty.hi * image.width + tx.lo, c) +
                       tx.w_hi * image.at(ty.hi * image.width + tx.hi, c));
        out[static_cast<std::size_t>(3) * (oy * out_w + ox) + c] = v;
      }
    }
  }
  return out;
}

std::vector<double> resample_bilinear_adjoint(const std::vector<double>& grad,
                                              int out_w, int out_h, int in_w,
                                              int in_h) {
  std::vector<double> out(static_cast<std::size_t>(3) * in_w * in_h, 0.0);
  for (int oy = 0; oy < out_h; ++oy) {
    const Taps ty = taps_for(oy, out_h, in_h);
    for (int ox = 0; ox < out_w; ++ox) {
      const Taps tx = taps_for(ox, out_w, in_w);
      for (int c = 0; c < 3; ++c) {
        const double g = grad[static_cast<std::size_t>(3) * (oy * out_w + ox) + c];
        out[static_cast<std::size_t>(3) * (ty.lo * in_w + tx.lo) + c] += ty.w_lo * tx.w_lo * g;
        out[static_cast<std::size_t>(3) * (ty.lo * in_w + tx.hi) + c] += ty.w_lo * tx.w_hi * g;
        out[static_cast<std::size_t>(3) * (ty.hi * in_w + tx.lo) + c] += ty.w_hi * tx.w_lo * g;
        out[static_cast<std::size_t>(3) * (ty.hi * in_w + tx.hi) + c] += ty.w_hi * tx.w_hi * g;
      }
    }
  }
  return out;
}

}  // namespace detail

namespace {

struct Forward {
  std::vector<double> x;   // downsampled input
  std::vector<double> z1;  // pre-activation
  std::vector<double> a1;  // post-ReLU
  std::array<double, 2> z2;
};

Forward run_forward(const MlpClassifier& m, const RgbImage& image) {
  Forward f;
  f.x = detail::resample_bilinear(image, m.in_width, m.in_height);
  const int d = m.input_dim();
  f.z1.resize(m.hidden);
  f.a1.resize(m.hidden);
  for (int u = 0; u < m.hidden; ++u) {
    double z = m.b1[u];
    const double* row = m.w1.data() + static_cast<std::size_t>(u) * d;
    for (int i = 0; i < d; ++i) z += row[i] * f.x[i];
    f.z1[u] = z;
    f.a1[u] = std::max(z, 0.0);
  }
  for (int o = 0; o < 2; ++o) {
    double z = m.b2[o];
    const double* row = m.w2.data() + static_cast<std::size_t>(o) * m.hidden;
    for (int u = 0; u < m.hidden; ++u) z += row[u] * f.a1[u];
    f.z2[static_cast<std::size_t>(o)] = z;
  }
  return f;
}

double cross_entropy(const std::array<double, 2>& z, int label) {
  const double m = std::max(z[0], z[1]);
  const double lse = m + std::log(std::exp(z[0] - m) + std::exp(z[1] - m));
  return lse - z[static_cast<std::size_t>(label)];
}

std::array<double, 2> softmax(const std::array<double, 2>& z) {
  const double m = std::max(z[0], z[1]);
  const double e0 = std::exp(z[0] - m);
  const double e1 = std::exp(z[1] - m);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

}  // namespace

std::array<double, 2> MlpClassifier::logits(const RgbImage& image) const {
  return run_forward(*this, image).z2;
}

int MlpClassifier::predict(const RgbImage& image) const {
  const auto z = logits(image);
  return z[1] > z[0] ? 1 : 0;
}

double MlpClassifier::loss(const RgbImage& image, int label) const {
  return cross_entropy(run_forward(*this, image).z2, label);
}

std::vector<double> MlpClassifier::input_gradient(const RgbImage& image,
                                                  int label) const {
  const Forward f = run_forward(*this, image);
  std::array<double, 2> dz2 = softmax(f.z2);
  dz2[static_cast<std::size_t>(label)] -= 1.0;

  const int d = input_dim();
  std::vector<double> dz1(hidden);
  for (int u = 0; u < hidden; ++u) {
    const double da = dz2[0] * w2[u] + dz2[1] * w2[static_cast<std::size_t>(hidden) + u];
    dz1[u] = f.z1[u] > 0.0 ? da : 0.0;
  }
  std::vector<double> dx(d, 0.0);
  for (int u = 0; u < hidden; ++u) {
    const double g = dz1[u];
    if (g == 0.0) continue;
    const double* row = w1.data() + static_cast<std::size_t>(u) * d;
    for (int i = 0; i < d; ++i) dx[i] += g * row[i];
  }
  return detail::resample_bilinear_adjoint(dx, in_width, in_height,
                                           image.width, image.height);
}

MlpClassifier make_mlp(int in_width, int in_height, int hidden,
                       std::uint64_t seed, double init_scale) {
  MlpClassifier m;
  m.in_width = in_width;
  m.in_height = in_height;
  m.hidden = hidden;
  const int d = m.input_dim();
  m.w1.resize(static_cast<std::size_t>(hidden) * d);
  m.b1.assign(hidden, 0.0);
  m.w2.resize(static_cast<std::size_t>(2) * hidden);
  m.b2.assign(2, 0.0);

  std::mt19937_64 rng = make_rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double s1 = init_scale / std::sqrt(static_cast<double>(d));
  for (double& w : m.w1) w = s1 * u(rng);
  const double s2 = init_scale / std::sqrt(static_cast<double>(hidden));
  for (double& w : m.w2) w = s2 * u(rng);
  return m;
}

double param_step(MlpClassifier& model, const std::vector<RgbImage>& images,
                  const std::vector<int>& labels, double learning_rate) {
  if (images.empty() || images.size() != labels.size())
    raise(errc::invalid_config, "batch images/labels mismatch");
  const int d = model.input_dim();
  const int h = model.hidden;
  std::vector<double> gw1(model.w1.size(), 0.0), gb1(h, 0.0);
  std::vector<double> gw2(model.w2.size(), 0.0), gb2(2, 0.0);

  double total_loss = 0.0;
  const double invB = 1.0 / static_cast<double>(images.size());
  for (std::size_t s = 0; s < images.size(); ++s) {
    const Forward f = run_forward(model, images[s]);
    total_loss += cross_entropy(f.z2, labels[s]);

    std::array<double, 2> dz2 = softmax(f.z2);
    dz2[static_cast<std::size_t>(labels[s])] -= 1.0;
    for (int o = 0; o < 2; ++o) {
      const double g = dz2[static_cast<std::size_t>(o)] * invB;
      gb2[o] += g;
      double* row = gw2.data() + static_cast<std::size_t>(o) * h;
      for (int u = 0; u < h; ++u) row[u] += g * f.a1[u];
    }
    for (int u = 0; u < h; ++u) {
      if (f.z1[u] <= 0.0) continue;
      const double da =
          dz2[0] * model.w2[u] + dz2[1] * model.w2[static_cast<std::size_t>(h) + u];
      const double g = da * invB;
      gb1[u] += g;
      double* row = gw1.data() + static_cast<std::size_t>(u) * d;
      for (int i = 0; i < d; ++i) row[i] += g * f.x[i];
    }
  }

  for (std::size_t i = 0; i < model.w1.size(); ++i) model.w1[i] -= learning_rate * gw1[i];
  for (int u = 0; u < h; ++u) model.b1[u] -= learning_rate * gb1[u];
  for (std::size_t i = 0; i < model.w2.size(); ++i) model.w2[i] -= learning_rate * gw2[i];
  for (int o = 0; o < 2; ++o) model.b2[o] -= learning_rate * gb2[o];
  return total_loss * invB;
}

}  // namespace casa
