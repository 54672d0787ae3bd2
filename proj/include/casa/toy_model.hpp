#pragma once

#include <cstdint>
#include <vector>

#include "casa/adversary.hpp"
#include "casa/types.hpp"

namespace casa {

// Two-layer perceptron on a bilinearly downsampled patch. The resampling is
// part of the model and is differentiated through, so input_gradient is exact
// at the original resolution.
struct MlpClassifier final : public DifferentiableModel {
  int in_width = 16;
  int in_height = 16;
  int hidden = 32;
  std::vector<double> w1;  // hidden x (in_width*in_height*3), row-major
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // 2 x hidden, row-major
  std::vector<double> b2;  // 2

  int input_dim() const { return in_width * in_height * 3; }

  std::array<double, 2> logits(const RgbImage& image) const;
  int predict(const RgbImage& image) const;

  double loss(const RgbImage& image, int label) const override;
  std::vector<double> input_gradient(const RgbImage& image,
                                     int label) const override;
};

struct TrainConfig {
  double learning_rate = 0.05;
  int epochs = 5;
  int batch_size = 32;
  std::uint64_t seed = 42;
  double init_scale = 1.0;
};

// Uniform +/- scale/sqrt(fan_in) initialization, deterministic under seed.
MlpClassifier make_mlp(int in_width, int in_height, int hidden,
                       std::uint64_t seed, double init_scale = 1.0);

// One SGD step on the mean batch loss; returns the pre-step mean loss.
double param_step(MlpClassifier& model, const std::vector<RgbImage>& images,
                  const std::vector<int>& labels, double learning_rate);

namespace detail {

// Bilinear resample (half-pixel-center convention) to out_w x out_h; output
// interleaved RGB. The adjoint accumulates an output-sized gradient back to
// the input resolution.
std::vector<double> resample_bilinear(const RgbImage& image, int out_w,
                                      int out_h);
std::vector<double> resample_bilinear_adjoint(const std::vector<double>& grad,
                                              int out_w, int out_h, int in_w,
                                              int in_h);

}  // namespace detail

}  // namespace casa
