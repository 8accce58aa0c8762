#ifndef SEMCOM_MAE_HPP
#define SEMCOM_MAE_HPP

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "semcom/rng.hpp"
#include "semcom/tensor.hpp"

namespace semcom {

enum class HeadKind { reconstruction, classification };

std::string head_kind_name(HeadKind kind);
HeadKind head_kind_from_name(const std::string& name);

// Architecture settings. desk_default() is the configuration exercised by the
// test suite; paper_scale() mirrors the large 14-layer/12-head setup and is
// constructible but far too heavy for CI.
struct ModelConfig {
  std::size_t image_size = 16;
  std::size_t channels = 1;
  std::size_t patch_size = 4;
  std::size_t embed_dim = 32;
  std::size_t encoder_layers = 2;
  std::size_t attention_heads = 4;
  double mlp_ratio = 2.0;
  std::size_t decoder_hidden = 64;
  std::size_t num_classes = 4;
  double masking_ratio = 0.5;

  void validate() const;  // throws ConfigError
  std::size_t patches_per_side() const { return image_size / patch_size; }
  std::size_t num_patches() const {
    return patches_per_side() * patches_per_side();
  }
  std::size_t patch_dim() const { return patch_size * patch_size * channels; }

  static ModelConfig desk_default();
  static ModelConfig paper_scale();

  bool operator==(const ModelConfig&) const = default;
};

// Which patches are hidden from the encoder for one transmission.
struct MaskPlan {
  std::size_t total_patches = 0;
  double ratio = 0.0;
  std::vector<std::size_t> masked;    // sorted
  std::vector<std::size_t> unmasked;  // sorted

  void validate() const;  // throws ContractError on broken invariants
};

// Uniform subset without replacement; |masked| = round(ratio * total).
MaskPlan sample_mask(std::size_t total_patches, double ratio, RngStream& rng);

struct TransformerBlockParams {
  Tensor ln1_gamma, ln1_beta;
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
  Tensor ln2_gamma, ln2_beta;
  Tensor mlp_w1, mlp_b1, mlp_w2, mlp_b2;
};

// Three fully-connected layers; applied per token (reconstruction) or to the
// mean-pooled token (classification).
struct DecoderHeadParams {
  HeadKind kind = HeadKind::reconstruction;
  Tensor w1, b1, w2, b2, w3, b3;
};

// All trainable parameters of the transmitter/receiver pipeline.
struct MaeModel {
  ModelConfig config;
  Tensor patch_embed_w;  // {patch_dim, D}
  Tensor patch_embed_b;  // {D}
  Tensor pos_embed;      // {num_patches, D}, learned
  Tensor mask_token;     // {D}, one shared learned vector
  std::vector<TransformerBlockParams> blocks;
  DecoderHeadParams head;

  static MaeModel init(const ModelConfig& config, HeadKind head_kind,
                       RngStream& rng);

  // Fresh decoder head for a new task; everything else is untouched.
  void reset_head(HeadKind head_kind, RngStream& rng);

  std::vector<Tensor> parameters() const;
  std::vector<std::pair<std::string, Tensor>> named_parameters() const;
  void zero_grad();

  // Raw parameter bytes in named order; equal vectors mean bit-identical
  // models.
  std::vector<double> flatten_values() const;
};

// Standardizes an image to zero mean and unit variance over all pixels.
// The transmitter applies this ahead of patch embedding, so its operating
// point does not depend on the raw pixel scale; reconstruction targets live
// in the same standardized domain. Differentiable, so input-space attack
// gradients pass through it. A constant image maps to all zeros.
Tensor normalize_image(const Tensor& image);

// Splits an {H, W, C} image into row-major flattened patches {P, patch_dim}.
// Differentiable; patchify followed by unpatchify is the identity.
Tensor patchify(const Tensor& image, std::size_t patch_size);
Tensor unpatchify(const Tensor& patches, std::size_t image_h,
                  std::size_t image_w, std::size_t channels,
                  std::size_t patch_size);

// Transformer encoder over unmasked patches only. Masked patches never enter
// the computation; output is {|unmasked|, D}.
Tensor encode(const Tensor& image, const MaskPlan& plan, const MaeModel& model);

// Full-length token sequence for the decoder: features at their original
// positions, the shared mask token elsewhere, positional embeddings added to
// every token.
Tensor assemble_decoder_input(const Tensor& features, const MaskPlan& plan,
                              const MaeModel& model);

// Reconstruction head: {P, patch_dim}. Classification head: {num_classes}
// logits from the mean-pooled token sequence.
Tensor decode(const Tensor& tokens, const MaeModel& model);

// Cross-entropy (classification, target = label index) or mean squared error
// over pixels (reconstruction, target = patchified image).
Tensor task_loss(const Tensor& output, const Tensor& target_patches,
                 std::size_t target_label, HeadKind kind);

}  // namespace semcom

#endif  // SEMCOM_MAE_HPP
