#include "semcom/mae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "semcom/errors.hpp"

namespace semcom {

std::string head_kind_name(HeadKind kind) {
  return kind == HeadKind::reconstruction ? "reconstruction" : "classification";
}

HeadKind head_kind_from_name(const std::string& name) {
  if (name == "reconstruction") return HeadKind::reconstruction;
  if (name == "classification") return HeadKind::classification;
  throw ConfigError("unknown head kind '" + name + "'");
}

void ModelConfig::validate() const {
  if (image_size == 0 || patch_size == 0 || channels == 0)
    throw ConfigError("model: image_size, patch_size, channels must be positive");
  if (image_size % patch_size != 0)
    throw ConfigError("model: image_size " + std::to_string(image_size) +
                      " not divisible by patch_size " +
                      std::to_string(patch_size));
  if (embed_dim == 0 || attention_heads == 0 ||
      embed_dim % attention_heads != 0)
    throw ConfigError("model: embed_dim " + std::to_string(embed_dim) +
                      " not divisible by attention_heads " +
                      std::to_string(attention_heads));
  if (mlp_ratio <= 0.0) throw ConfigError("model: mlp_ratio must be positive");
  if (num_classes < 2) throw ConfigError("model: num_classes must be >= 2");
  if (masking_ratio < 0.0 || masking_ratio > 1.0)
    throw ConfigError("model: masking_ratio must lie in [0,1]");
  if (decoder_hidden == 0)
    throw ConfigError("model: decoder_hidden must be positive");
}

ModelConfig ModelConfig::desk_default() { return ModelConfig{}; }

ModelConfig ModelConfig::paper_scale() {
  ModelConfig c;
  c.image_size = 224;  // 14x14 grid of 16-pixel patches
  c.channels = 3;
  c.patch_size = 16;
  c.embed_dim = 768;
  c.encoder_layers = 14;
  c.attention_heads = 12;
  c.mlp_ratio = 4.0;
  c.decoder_hidden = 512;
  c.num_classes = 10;
  c.masking_ratio = 0.5;
  return c;
}

void MaskPlan::validate() const {
  std::size_t expected =
      static_cast<std::size_t>(std::lround(ratio * static_cast<double>(total_patches)));
  if (masked.size() != expected)
    throw ContractError("mask plan: |masked| != round(ratio * total)");
  if (masked.size() + unmasked.size() != total_patches)
    throw ContractError("mask plan: masked and unmasked do not cover all patches");
  std::vector<char> seen(total_patches, 0);
  for (std::size_t i : masked) {
    if (i >= total_patches || seen[i])
      throw ContractError("mask plan: invalid or duplicate masked index");
    seen[i] = 1;
  }
  for (std::size_t i : unmasked) {
    if (i >= total_patches || seen[i])
      throw ContractError("mask plan: invalid or duplicate unmasked index");
    seen[i] = 1;
  }
  if (!std::is_sorted(masked.begin(), masked.end()) ||
      !std::is_sorted(unmasked.begin(), unmasked.end()))
    throw ContractError("mask plan: index lists must be sorted");
}

MaskPlan sample_mask(std::size_t total_patches, double ratio, RngStream& rng) {
  if (ratio < 0.0 || ratio > 1.0)
    throw ConfigError("sample_mask: ratio must lie in [0,1]");
  std::vector<std::size_t> order(total_patches);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::size_t count =
      static_cast<std::size_t>(std::lround(ratio * static_cast<double>(total_patches)));
  MaskPlan plan;
  plan.total_patches = total_patches;
  plan.ratio = ratio;
  plan.masked.assign(order.begin(), order.begin() + count);
  plan.unmasked.assign(order.begin() + count, order.end());
  std::sort(plan.masked.begin(), plan.masked.end());
  std::sort(plan.unmasked.begin(), plan.unmasked.end());
  return plan;
}

namespace {

Tensor init_weight(Shape shape, RngStream& rng, double stddev) {
  std::size_t n = shape_numel(shape);
  std::vector<double> data(n);
  for (double& v : data) v = stddev * rng.normal();
  return Tensor::from_data(std::move(shape), std::move(data), true);
}

// Fan-aware scale so signal and gradient magnitudes stay O(1) at any width;
// a fixed stddev would throttle both on narrow desk-scale models.
Tensor init_linear(std::size_t fan_in, std::size_t fan_out, RngStream& rng) {
  double stddev = std::sqrt(2.0 / static_cast<double>(fan_in + fan_out));
  return init_weight({fan_in, fan_out}, rng, stddev);
}

Tensor init_zeros(Shape shape) { return Tensor::zeros(std::move(shape), true); }

Tensor init_ones(Shape shape) {
  return Tensor::full(std::move(shape), 1.0, true);
}

TransformerBlockParams init_block(std::size_t d, double mlp_ratio,
                                  RngStream& rng) {
  std::size_t hidden =
      static_cast<std::size_t>(std::lround(mlp_ratio * static_cast<double>(d)));
  TransformerBlockParams b;
  b.ln1_gamma = init_ones({d});
  b.ln1_beta = init_zeros({d});
  b.wq = init_linear(d, d, rng);
  b.bq = init_zeros({d});
  b.wk = init_linear(d, d, rng);
  b.bk = init_zeros({d});
  b.wv = init_linear(d, d, rng);
  b.bv = init_zeros({d});
  b.wo = init_linear(d, d, rng);
  b.bo = init_zeros({d});
  b.ln2_gamma = init_ones({d});
  b.ln2_beta = init_zeros({d});
  b.mlp_w1 = init_linear(d, hidden, rng);
  b.mlp_b1 = init_zeros({hidden});
  b.mlp_w2 = init_linear(hidden, d, rng);
  b.mlp_b2 = init_zeros({d});
  return b;
}

DecoderHeadParams init_head(const ModelConfig& cfg, HeadKind kind,
                            RngStream& rng) {
  std::size_t out = kind == HeadKind::reconstruction ? cfg.patch_dim()
                                                     : cfg.num_classes;
  DecoderHeadParams h;
  h.kind = kind;
  h.w1 = init_linear(cfg.embed_dim, cfg.decoder_hidden, rng);
  h.b1 = init_zeros({cfg.decoder_hidden});
  h.w2 = init_linear(cfg.decoder_hidden, cfg.decoder_hidden, rng);
  h.b2 = init_zeros({cfg.decoder_hidden});
  h.w3 = init_linear(cfg.decoder_hidden, out, rng);
  h.b3 = init_zeros({out});
  return h;
}

}  // namespace

MaeModel MaeModel::init(const ModelConfig& config, HeadKind head_kind,
                        RngStream& rng) {
  config.validate();
  MaeModel m;
  m.config = config;
  m.patch_embed_w = init_linear(config.patch_dim(), config.embed_dim, rng);
  m.patch_embed_b = init_zeros({config.embed_dim});
  m.pos_embed =
      init_weight({config.num_patches(), config.embed_dim}, rng, 0.1);
  m.mask_token = init_weight({config.embed_dim}, rng, 0.1);
  m.blocks.reserve(config.encoder_layers);
  for (std::size_t i = 0; i < config.encoder_layers; ++i)
    m.blocks.push_back(init_block(config.embed_dim, config.mlp_ratio, rng));
  m.head = init_head(config, head_kind, rng);
  return m;
}

void MaeModel::reset_head(HeadKind head_kind, RngStream& rng) {
  head = init_head(config, head_kind, rng);
}

std::vector<Tensor> MaeModel::parameters() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

std::vector<std::pair<std::string, Tensor>> MaeModel::named_parameters() const {
  std::vector<std::pair<std::string, Tensor>> out;
  out.emplace_back("patch_embed.w", patch_embed_w);
  out.emplace_back("patch_embed.b", patch_embed_b);
  out.emplace_back("pos_embed", pos_embed);
  out.emplace_back("mask_token", mask_token);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    auto& b = blocks[i];
    std::string p = "block" + std::to_string(i) + ".";
    out.emplace_back(p + "ln1.gamma", b.ln1_gamma);
    out.emplace_back(p + "ln1.beta", b.ln1_beta);
    out.emplace_back(p + "attn.wq", b.wq);
    out.emplace_back(p + "attn.bq", b.bq);
    out.emplace_back(p + "attn.wk", b.wk);
    out.emplace_back(p + "attn.bk", b.bk);
    out.emplace_back(p + "attn.wv", b.wv);
    out.emplace_back(p + "attn.bv", b.bv);
    out.emplace_back(p + "attn.wo", b.wo);
    out.emplace_back(p + "attn.bo", b.bo);
    out.emplace_back(p + "ln2.gamma", b.ln2_gamma);
    out.emplace_back(p + "ln2.beta", b.ln2_beta);
    out.emplace_back(p + "mlp.w1", b.mlp_w1);
    out.emplace_back(p + "mlp.b1", b.mlp_b1);
    out.emplace_back(p + "mlp.w2", b.mlp_w2);
    out.emplace_back(p + "mlp.b2", b.mlp_b2);
  }
  out.emplace_back("head.w1", head.w1);
  out.emplace_back("head.b1", head.b1);
  out.emplace_back("head.w2", head.w2);
  out.emplace_back("head.b2", head.b2);
  out.emplace_back("head.w3", head.w3);
  out.emplace_back("head.b3", head.b3);
  return out;
}

void MaeModel::zero_grad() {
  for (auto& [name, t] : named_parameters()) t.zero_grad();
}

std::vector<double> MaeModel::flatten_values() const {
  std::vector<double> out;
  for (auto& [name, t] : named_parameters())
    out.insert(out.end(), t.data().begin(), t.data().end());
  return out;
}

Tensor normalize_image(const Tensor& image) {
  if (image.rank() != 3)
    throw ShapeError("normalize_image: expected {H,W,C} image, got " +
                     shape_to_string(image.shape()));
  std::size_t n = image.numel();
  Tensor gamma = Tensor::from_data({n}, std::vector<double>(n, 1.0));
  Tensor beta = Tensor::from_data({n}, std::vector<double>(n, 0.0));
  // The epsilon must sit well below the pixel variance of a faint image
  // (~1e-7 for the synthetic data at its smallest amplitudes), or the
  // standardization would silently stop rescaling exactly the inputs that
  // need it most.
  return reshape(layer_norm_rows(reshape(image, {1, n}), gamma, beta, 1e-12),
                 image.shape());
}

Tensor patchify(const Tensor& image, std::size_t patch_size) {
  if (image.rank() != 3)
    throw ShapeError("patchify: expected {H,W,C} image, got " +
                     shape_to_string(image.shape()));
  std::size_t h = image.dim(0), w = image.dim(1), c = image.dim(2);
  if (patch_size == 0 || h % patch_size != 0 || w % patch_size != 0)
    throw ConfigError("patchify: image " + std::to_string(h) + "x" +
                      std::to_string(w) + " not divisible by patch size " +
                      std::to_string(patch_size));
  std::size_t gh = h / patch_size, gw = w / patch_size;
  std::size_t patch_dim = patch_size * patch_size * c;
  std::vector<std::size_t> map(gh * gw * patch_dim);
  std::size_t out = 0;
  for (std::size_t gy = 0; gy < gh; ++gy)
    for (std::size_t gx = 0; gx < gw; ++gx)
      for (std::size_t py = 0; py < patch_size; ++py)
        for (std::size_t px = 0; px < patch_size; ++px)
          for (std::size_t ch = 0; ch < c; ++ch)
            map[out++] = ((gy * patch_size + py) * w + gx * patch_size + px) * c + ch;
  return reorder(image, map, {gh * gw, patch_dim});
}

Tensor unpatchify(const Tensor& patches, std::size_t image_h,
                  std::size_t image_w, std::size_t channels,
                  std::size_t patch_size) {
  if (patches.rank() != 2)
    throw ShapeError("unpatchify: expected {P, patch_dim}, got " +
                     shape_to_string(patches.shape()));
  std::size_t gh = image_h / patch_size, gw = image_w / patch_size;
  std::size_t patch_dim = patch_size * patch_size * channels;
  if (patches.dim(0) != gh * gw || patches.dim(1) != patch_dim)
    throw ShapeError("unpatchify: patch grid inconsistent with image size");
  // Inverse of the patchify permutation.
  std::vector<std::size_t> map(image_h * image_w * channels);
  std::size_t in = 0;
  for (std::size_t gy = 0; gy < gh; ++gy)
    for (std::size_t gx = 0; gx < gw; ++gx)
      for (std::size_t py = 0; py < patch_size; ++py)
        for (std::size_t px = 0; px < patch_size; ++px)
          for (std::size_t ch = 0; ch < channels; ++ch) {
            std::size_t pixel =
                ((gy * patch_size + py) * image_w + gx * patch_size + px) *
                    channels + ch;
            map[pixel] = in++;
          }
  return reorder(patches, map, {image_h, image_w, channels});
}

namespace {

Tensor transformer_block(const Tensor& x, const TransformerBlockParams& p,
                         std::size_t heads) {
  std::size_t d = x.dim(1);
  std::size_t hd = d / heads;
  Tensor normed = layer_norm_rows(x, p.ln1_gamma, p.ln1_beta);
  Tensor q = add_rowvec(matmul(normed, p.wq), p.bq);
  Tensor k = add_rowvec(matmul(normed, p.wk), p.bk);
  Tensor v = add_rowvec(matmul(normed, p.wv), p.bv);
  std::vector<Tensor> head_outputs;
  head_outputs.reserve(heads);
  double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hd));
  for (std::size_t h = 0; h < heads; ++h) {
    Tensor qh = slice_cols(q, h * hd, hd);
    Tensor kh = slice_cols(k, h * hd, hd);
    Tensor vh = slice_cols(v, h * hd, hd);
    Tensor scores = scale(matmul(qh, transpose(kh)), inv_sqrt);
    Tensor attn = softmax_rows(scores);
    head_outputs.push_back(matmul(attn, vh));
  }
  Tensor merged = heads == 1 ? head_outputs[0] : concat_cols(head_outputs);
  Tensor attended = add(x, add_rowvec(matmul(merged, p.wo), p.bo));

  Tensor normed2 = layer_norm_rows(attended, p.ln2_gamma, p.ln2_beta);
  Tensor hidden = gelu(add_rowvec(matmul(normed2, p.mlp_w1), p.mlp_b1));
  Tensor mlp_out = add_rowvec(matmul(hidden, p.mlp_w2), p.mlp_b2);
  return add(attended, mlp_out);
}

}  // namespace

Tensor encode(const Tensor& image, const MaskPlan& plan,
              const MaeModel& model) {
  const ModelConfig& cfg = model.config;
  if (plan.total_patches != cfg.num_patches())
    throw ContractError("encode: mask plan covers " +
                        std::to_string(plan.total_patches) +
                        " patches, model expects " +
                        std::to_string(cfg.num_patches()));
  plan.validate();
  Tensor patches = patchify(normalize_image(image), cfg.patch_size);
  // Gather before embedding: masked patches never enter any computation.
  Tensor visible = gather_rows(patches, plan.unmasked);
  Tensor tokens = add_rowvec(matmul(visible, model.patch_embed_w),
                             model.patch_embed_b);
  tokens = add(tokens, gather_rows(model.pos_embed, plan.unmasked));
  for (const auto& block : model.blocks)
    tokens = transformer_block(tokens, block, cfg.attention_heads);
  // No trailing normalization: the features feed a nearest-neighbor
  // quantizer, and pinning their norm would hold them away from the
  // codebook and let the commitment terms drown the task gradient.
  return tokens;
}

Tensor assemble_decoder_input(const Tensor& features, const MaskPlan& plan,
                              const MaeModel& model) {
  if (features.rank() != 2 || features.dim(0) != plan.unmasked.size())
    throw ContractError("assemble_decoder_input: feature rows " +
                        shape_to_string(features.shape()) +
                        " do not match " +
                        std::to_string(plan.unmasked.size()) +
                        " unmasked patches");
  Tensor full = scatter_rows_with_fill(features, model.mask_token,
                                       plan.unmasked, plan.total_patches);
  return add(full, model.pos_embed);
}

Tensor decode(const Tensor& tokens, const MaeModel& model) {
  const DecoderHeadParams& h = model.head;
  if (tokens.rank() != 2 || tokens.dim(0) != model.config.num_patches())
    throw ContractError("decode: expected full token sequence of length " +
                        std::to_string(model.config.num_patches()));
  if (h.kind == HeadKind::reconstruction) {
    Tensor x = gelu(add_rowvec(matmul(tokens, h.w1), h.b1));
    x = gelu(add_rowvec(matmul(x, h.w2), h.b2));
    return add_rowvec(matmul(x, h.w3), h.b3);
  }
  Tensor pooled = reshape(mean_rows(tokens), {1, model.config.embed_dim});
  // Parameter-free standardization of the token average. Its raw scale is
  // tiny and drifts with how far the codewords have spread, which would
  // starve the logits of gradient; pinning it to zero mean and unit variance
  // keeps the head's operating point independent of that drift.
  std::size_t d = model.config.embed_dim;
  Tensor unit_gamma = Tensor::from_data({d}, std::vector<double>(d, 1.0));
  Tensor zero_beta = Tensor::from_data({d}, std::vector<double>(d, 0.0));
  pooled = layer_norm_rows(pooled, unit_gamma, zero_beta);
  Tensor x = gelu(add_rowvec(matmul(pooled, h.w1), h.b1));
  x = gelu(add_rowvec(matmul(x, h.w2), h.b2));
  Tensor logits = add_rowvec(matmul(x, h.w3), h.b3);
  return reshape(logits, {model.config.num_classes});
}

Tensor task_loss(const Tensor& output, const Tensor& target_patches,
                 std::size_t target_label, HeadKind kind) {
  if (kind == HeadKind::classification)
    return cross_entropy_logits(output, target_label);
  return mse(output, target_patches);
}

}  // namespace semcom
