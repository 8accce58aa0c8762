#ifndef SEMCOM_PIPELINE_HPP
#define SEMCOM_PIPELINE_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "semcom/channel.hpp"
#include "semcom/codebook.hpp"
#include "semcom/mae.hpp"
#include "semcom/rng.hpp"
#include "semcom/tensor.hpp"

namespace semcom {

// Transmitter/receiver pair: the autoencoder plus, optionally, the shared
// discrete codebook. Without the codebook the encoder features go to the
// decoder directly (the raw-feature arm).
struct SystemConfig {
  ModelConfig model;
  bool use_codebook = true;
  std::size_t codebook_size = 256;
  double codebook_beta = 0.25;

  void validate() const;
  bool operator==(const SystemConfig&) const = default;
};

struct SemanticSystem {
  SystemConfig config;
  MaeModel model;
  std::optional<Codebook> codebook;

  static SemanticSystem init(const SystemConfig& config, HeadKind head_kind,
                             RngStream& rng);

  // Everything the optimizer updates: network weights plus codebook vectors.
  std::vector<Tensor> trainable_parameters() const;
  // Network weights only; this is the set the weight perturbation covers.
  std::vector<Tensor> network_parameters() const;
  std::vector<std::pair<std::string, Tensor>> named_parameters() const;
  std::vector<double> flatten_values() const;
  void zero_grad();
};

// One sample prepared for a forward pass.
struct PreparedSample {
  Tensor image;           // {H, W, C}
  MaskPlan plan;
  std::size_t label = 0;  // classification target
  Tensor target_patches;  // patchified clean image, reconstruction target
};

PreparedSample prepare_sample(const SemanticSystem& sys, const Tensor& image,
                              std::size_t label, RngStream& mask_rng);

// Gradient-tracking forward for training and attack passes. With a channel,
// the decoder consumes the *received* codeword rows and the straight-through
// estimator copies their gradient back to the encoder output; without one,
// sent and received indices coincide.
struct TrainForward {
  Tensor output;  // class logits {C} or reconstructed patches {P, patch_dim}
  Tensor z_e;     // encoder features {U, D}
  std::vector<std::size_t> sent_indices;
  std::vector<std::size_t> received_indices;
};

TrainForward train_forward(SemanticSystem& sys, const Tensor& image,
                           const MaskPlan& plan,
                           const ChannelConfig* channel,
                           RngStream* channel_rng);

// Task loss plus, when the codebook is active, the two quantization terms.
Tensor train_loss(SemanticSystem& sys, const TrainForward& fwd,
                  const PreparedSample& sample);

// Deployment forward: the receiver reconstructs decoder input purely from
// looked-up codebook rows (no straight-through arithmetic), so a zero-noise
// transmitted run is bit-identical to a channel-free run.
struct EvalForward {
  Tensor output;
  std::vector<std::size_t> sent_indices;
  std::vector<std::size_t> received_indices;
};

EvalForward eval_forward(const SemanticSystem& sys, const Tensor& image,
                         const MaskPlan& plan, const ChannelConfig* channel,
                         RngStream* channel_rng);

std::size_t argmax_index(const Tensor& logits);

}  // namespace semcom

#endif  // SEMCOM_PIPELINE_HPP
