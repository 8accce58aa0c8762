#include "semcom/pipeline.hpp"

#include <algorithm>

#include "semcom/errors.hpp"

namespace semcom {

void SystemConfig::validate() const {
  model.validate();
  if (use_codebook) {
    if (codebook_size < 2)
      throw ConfigError("system: codebook_size must be at least 2");
    if (codebook_beta < 0.0)
      throw ConfigError("system: codebook_beta must be >= 0");
  }
}

SemanticSystem SemanticSystem::init(const SystemConfig& config,
                                    HeadKind head_kind, RngStream& rng) {
  config.validate();
  SemanticSystem sys;
  sys.config = config;
  sys.model = MaeModel::init(config.model, head_kind, rng);
  if (config.use_codebook)
    sys.codebook = init_codebook(config.codebook_size, config.model.embed_dim,
                                 rng, config.codebook_beta);
  return sys;
}

std::vector<Tensor> SemanticSystem::trainable_parameters() const {
  std::vector<Tensor> params = model.parameters();
  if (codebook) params.push_back(codebook->vectors);
  return params;
}

std::vector<Tensor> SemanticSystem::network_parameters() const {
  return model.parameters();
}

std::vector<std::pair<std::string, Tensor>> SemanticSystem::named_parameters() const {
  auto named = model.named_parameters();
  if (codebook) named.emplace_back("codebook.vectors", codebook->vectors);
  return named;
}

std::vector<double> SemanticSystem::flatten_values() const {
  std::vector<double> out;
  for (auto& [name, t] : named_parameters())
    out.insert(out.end(), t.data().begin(), t.data().end());
  return out;
}

void SemanticSystem::zero_grad() {
  for (auto& [name, t] : named_parameters()) t.zero_grad();
}

PreparedSample prepare_sample(const SemanticSystem& sys, const Tensor& image,
                              std::size_t label, RngStream& mask_rng) {
  const ModelConfig& cfg = sys.config.model;
  PreparedSample s;
  s.image = image;
  s.plan = sample_mask(cfg.num_patches(), cfg.masking_ratio, mask_rng);
  s.label = label;
  s.target_patches =
      patchify(normalize_image(image), cfg.patch_size).detach_copy();
  return s;
}

namespace {

std::vector<std::size_t> send_over_channel(
    const std::vector<std::size_t>& indices, std::size_t bits_per_index,
    const ChannelConfig* channel, RngStream* channel_rng) {
  if (!channel) return indices;
  if (!channel_rng)
    throw ContractError("pipeline: channel configured but no channel rng");
  IndexFrame frame{indices, bits_per_index};
  return transmit_indices(frame, *channel, *channel_rng).indices;
}

}  // namespace

TrainForward train_forward(SemanticSystem& sys, const Tensor& image,
                           const MaskPlan& plan, const ChannelConfig* channel,
                           RngStream* channel_rng) {
  TrainForward fwd;
  fwd.z_e = encode(image, plan, sys.model);
  Tensor decoder_features;
  if (sys.codebook) {
    const Codebook& cb = *sys.codebook;
    fwd.sent_indices = quantize_rows(fwd.z_e, cb);
    fwd.received_indices = send_over_channel(
        fwd.sent_indices, cb.bits_per_index(), channel, channel_rng);
    decoder_features =
        quantize_straight_through(fwd.z_e, cb, fwd.received_indices);
  } else {
    decoder_features = fwd.z_e;
  }
  Tensor tokens = assemble_decoder_input(decoder_features, plan, sys.model);
  fwd.output = decode(tokens, sys.model);
  return fwd;
}

Tensor train_loss(SemanticSystem& sys, const TrainForward& fwd,
                  const PreparedSample& sample) {
  Tensor loss = task_loss(fwd.output, sample.target_patches, sample.label,
                          sys.model.head.kind);
  if (sys.codebook)
    loss = add(loss, quantization_loss_terms(fwd.z_e, *sys.codebook,
                                             fwd.sent_indices));
  return loss;
}

EvalForward eval_forward(const SemanticSystem& sys, const Tensor& image,
                         const MaskPlan& plan, const ChannelConfig* channel,
                         RngStream* channel_rng) {
  EvalForward fwd;
  Tensor z_e = encode(image, plan, sys.model);
  Tensor decoder_features;
  if (sys.codebook) {
    const Codebook& cb = *sys.codebook;
    fwd.sent_indices = quantize_rows(z_e, cb);
    fwd.received_indices = send_over_channel(
        fwd.sent_indices, cb.bits_per_index(), channel, channel_rng);
    decoder_features = lookup_rows(fwd.received_indices, cb);
  } else {
    decoder_features = z_e;
  }
  Tensor tokens = assemble_decoder_input(decoder_features, plan, sys.model);
  fwd.output = decode(tokens, sys.model);
  return fwd;
}

std::size_t argmax_index(const Tensor& logits) {
  const auto& v = logits.data();
  if (v.empty()) throw ContractError("argmax_index: empty tensor");
  return static_cast<std::size_t>(
      std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace semcom
