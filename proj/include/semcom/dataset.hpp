#ifndef SEMCOM_DATASET_HPP
#define SEMCOM_DATASET_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "semcom/tensor.hpp"

namespace semcom {

struct LabeledImage {
  Tensor image;  // {H, W, C}, pixels in [0, 1]
  std::size_t label = 0;
};

struct Dataset {
  std::vector<LabeledImage> train;
  std::vector<LabeledImage> test;
  std::size_t num_classes = 0;
  std::size_t image_size = 0;
  std::size_t channels = 0;
};

// Parametric images on a mid-gray background:
//
//   image = clamp(0.5 + a * (sqrt(1 - w^2) * T_label + w * R) + noise, 0, 1)
//
// T_label is a fixed unit-L2 prototype per class: a corner of a regular
// tetrahedron in the span of the three cosine modes that repeat exactly
// within every (image_size/4)-sized patch. Each patch therefore carries an
// identical copy of the class pattern, so the class signal survives both the
// random patch masking and the receiver's token-feature average at full
// strength, and all class pairs are the same distance apart. R is a unit-L2
// per-sample mixture of texture_modes random cosine modes orthogonal to the
// prototype subspace: unpredictable content that reconstruction cannot infer
// from a prior, so the transmitted features have to carry it, which keeps
// the codebook in use. The twelve texture modes are split into one pool per
// class, and with probability texture_bias a sample draws its texture from
// its own class's pool: a predictive but brittle cue, sitting closer to the
// decision boundary than the prototype, that a plainly trained classifier
// leans on and a budgeted input attack can flip — adversarial training then
// has something real to unlearn. Prototype and texture share the scale
// a ~ U[amplitude_min, amplitude_max] (w = texture_weight splits the energy),
// so 'a' is exactly the planted signal's image-level L2 norm and class
// separation is the same angle at every amplitude: the margin distribution
// follows the amplitude band and is directly comparable to an L2
// perturbation budget (nearest-boundary distance ~ 0.58 * a at w = 0.5).
struct SyntheticSpec {
  std::size_t classes = 4;
  std::size_t image_size = 16;
  std::size_t channels = 1;
  std::size_t train_per_class = 192;
  std::size_t test_per_class = 64;
  double amplitude_min = 0.006;
  double amplitude_max = 0.05;
  double texture_weight = 0.5;
  std::size_t texture_modes = 3;
  double texture_bias = 0.75;
  double pixel_noise = 0.0003;

  void validate() const;  // throws ConfigError
  bool operator==(const SyntheticSpec&) const = default;
};

// Unit-L2-norm prototype of one class, length image_size*image_size*channels.
std::vector<double> class_template(const SyntheticSpec& spec,
                                   std::size_t label);

Dataset make_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

// CIFAR-10 binary batches: 10000 records of 3073 bytes (label byte, then
// 1024 red, 1024 green, 1024 blue). Loads data_batch_1..5.bin as train and
// test_batch.bin as test, keeping a deterministic seed-shuffled subset of
// each. Malformed files raise DataError naming the byte offset.
Dataset load_cifar10(const std::string& dir, std::size_t train_limit,
                     std::size_t test_limit, std::uint64_t seed);

// Single-file variant used by the loader and directly testable.
std::vector<LabeledImage> load_cifar10_batch(const std::string& path);

}  // namespace semcom

#endif  // SEMCOM_DATASET_HPP
