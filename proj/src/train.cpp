#include "semcom/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "semcom/errors.hpp"
#include "semcom/optim.hpp"

namespace semcom {

std::string train_mode_name(TrainMode mode) {
  switch (mode) {
    case TrainMode::standard: return "standard";
    case TrainMode::adversarial: return "adversarial";
    case TrainMode::awp: return "awp";
  }
  throw ContractError("train: unknown mode value");
}

TrainMode train_mode_from_name(const std::string& name) {
  if (name == "standard") return TrainMode::standard;
  if (name == "adversarial") return TrainMode::adversarial;
  if (name == "awp") return TrainMode::awp;
  throw ConfigError("train: unknown mode '" + name + "'");
}

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("train: epochs must be positive");
  if (batch_size == 0) throw ConfigError("train: batch_size must be positive");
  if (lr < 0.0) throw ConfigError("train: lr must be >= 0");
  if (grad_clip < 0.0) throw ConfigError("train: grad_clip must be >= 0");
  if (gamma < 0.0) throw ConfigError("train: gamma must be >= 0");
  if (mode != TrainMode::standard) attack.validate();
  if (channel) channel->validate();
}

LossFn sample_loss_fn(SemanticSystem& sys, const PreparedSample& sample) {
  const MaskPlan& plan = sample.plan;
  return [&sys, &sample, plan](const Tensor& input) {
    TrainForward fwd = train_forward(sys, input, plan, nullptr, nullptr);
    return train_loss(sys, fwd, sample);
  };
}

WeightPerturbation perturb_weights(SemanticSystem& sys,
                                   const std::vector<PreparedSample>& batch,
                                   double gamma) {
  if (batch.empty()) throw ContractError("perturb_weights: empty batch");
  if (gamma < 0.0) throw ConfigError("perturb_weights: gamma must be >= 0");
  std::vector<Tensor> params = sys.network_parameters();
  WeightPerturbation out;
  out.nu.reserve(params.size());
  if (gamma == 0.0) {
    for (auto& p : params) out.nu.emplace_back(p.numel(), 0.0);
    return out;
  }
  std::vector<Tensor> losses;
  losses.reserve(batch.size());
  for (const auto& sample : batch) {
    TrainForward fwd =
        train_forward(sys, sample.image, sample.plan, nullptr, nullptr);
    losses.push_back(train_loss(sys, fwd, sample));
  }
  mean_of(losses).backward();
  double theta_sq = 0.0, nu_sq = 0.0;
  for (auto& p : params) {
    double g_norm = 0.0;
    const auto* grad = p.has_grad() ? &p.grad() : nullptr;
    if (grad)
      for (double g : *grad) g_norm += g * g;
    g_norm = std::sqrt(g_norm);
    double p_norm = 0.0;
    for (double v : p.data()) p_norm += v * v;
    theta_sq += p_norm;
    p_norm = std::sqrt(p_norm);
    std::vector<double> nu(p.numel(), 0.0);
    if (grad && g_norm > 0.0 && p_norm > 0.0) {
      double scale = gamma * p_norm / g_norm;
      for (std::size_t i = 0; i < nu.size(); ++i) nu[i] = scale * (*grad)[i];
    }
    for (double v : nu) nu_sq += v * v;
    out.nu.push_back(std::move(nu));
  }
  out.ratio = theta_sq > 0.0 ? std::sqrt(nu_sq / theta_sq) : 0.0;
  sys.zero_grad();
  return out;
}

void apply_weight_perturbation(SemanticSystem& sys,
                               const WeightPerturbation& p, double sign) {
  std::vector<Tensor> params = sys.network_parameters();
  if (p.nu.size() != params.size())
    throw ContractError("apply_weight_perturbation: layout mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& values = params[i].mutable_data();
    if (p.nu[i].size() != values.size())
      throw ContractError("apply_weight_perturbation: layout mismatch");
    for (std::size_t j = 0; j < values.size(); ++j)
      values[j] += sign * p.nu[i][j];
  }
}

namespace {

// Re-seeds every codeword that went unselected for a whole epoch to an
// encoder output row of the epoch's leading samples. Without this, one early
// winner drifts to the feature centroid, absorbs every row, and gradient
// flow through the bottleneck dies (the usual rich-get-richer collapse of
// nearest-neighbor quantizers). Masks come from a dedicated fork, so the
// training streams are untouched and all training modes restart identically.
void restart_dead_codes(SemanticSystem& sys, const Dataset& data,
                        const std::vector<std::size_t>& order,
                        const std::vector<std::size_t>& usage,
                        std::uint64_t seed, std::size_t epoch) {
  Codebook& cb = *sys.codebook;
  std::vector<std::size_t> dead;
  for (std::size_t j = 0; j < usage.size(); ++j)
    if (usage[j] == 0) dead.push_back(j);
  if (dead.empty()) return;

  RngStream restart_base =
      RngStream(seed, StreamLabel::mask)
          .fork((0xFFFFFFFFull << 32) | static_cast<std::uint64_t>(epoch));
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; rows.size() < dead.size() && k < order.size(); ++k) {
    const LabeledImage& item = data.train[order[k]];
    RngStream mask_rng = restart_base.fork(k);
    PreparedSample prep =
        prepare_sample(sys, item.image, item.label, mask_rng);
    Tensor z = encode(prep.image, prep.plan, sys.model);
    std::size_t rows_in_z = z.dim(0);
    std::size_t dim = z.dim(1);
    for (std::size_t r = 0; r < rows_in_z && rows.size() < dead.size(); ++r)
      rows.emplace_back(z.data().begin() + static_cast<std::ptrdiff_t>(r * dim),
                        z.data().begin() +
                            static_cast<std::ptrdiff_t>((r + 1) * dim));
  }
  auto& values = cb.vectors.mutable_data();
  std::size_t dim = cb.dim();
  for (std::size_t t = 0; t < dead.size() && t < rows.size(); ++t)
    for (std::size_t d = 0; d < dim; ++d)
      values[dead[t] * dim + d] = rows[t][d];
}

struct EvalStats {
  double clean_loss = 0.0, adv_loss = 0.0;
  double clean_acc = 0.0, adv_acc = 0.0;
};

// Channel-free metrics over a fixed test subset. Mask plans come from forked
// streams, so this pass consumes no training randomness and identical models
// always report identical numbers.
EvalStats eval_on_subset(SemanticSystem& sys, const Dataset& data,
                         const TrainConfig& cfg, std::size_t epoch) {
  EvalStats stats;
  std::size_t n = std::min(cfg.eval_subset, data.test.size());
  if (n == 0) return stats;
  bool attacked = cfg.mode != TrainMode::standard && cfg.attack.epsilon > 0.0;
  RngStream mask_base(cfg.seed, StreamLabel::mask);
  std::size_t clean_hits = 0, adv_hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    RngStream mask_rng =
        mask_base.fork((static_cast<std::uint64_t>(epoch) << 32) | i);
    PreparedSample sample = prepare_sample(sys, data.test[i].image,
                                           data.test[i].label, mask_rng);
    EvalForward clean =
        eval_forward(sys, sample.image, sample.plan, nullptr, nullptr);
    Tensor clean_loss = task_loss(clean.output, sample.target_patches,
                                  sample.label, sys.model.head.kind);
    stats.clean_loss += clean_loss.item();
    bool clean_ok = sys.model.head.kind != HeadKind::classification ||
                    argmax_index(clean.output) == sample.label;
    clean_hits += clean_ok ? 1 : 0;
    if (attacked) {
      auto delta =
          generate_semantic_noise(sample_loss_fn(sys, sample), sample.image,
                                  cfg.attack);
      Tensor adv_image = apply_perturbation(sample.image, delta);
      EvalForward adv =
          eval_forward(sys, adv_image, sample.plan, nullptr, nullptr);
      Tensor adv_loss = task_loss(adv.output, sample.target_patches,
                                  sample.label, sys.model.head.kind);
      stats.adv_loss += adv_loss.item();
      bool adv_ok = sys.model.head.kind != HeadKind::classification ||
                    argmax_index(adv.output) == sample.label;
      adv_hits += adv_ok ? 1 : 0;
    }
  }
  double inv = 1.0 / static_cast<double>(n);
  stats.clean_loss *= inv;
  stats.clean_acc = static_cast<double>(clean_hits) * inv;
  if (attacked) {
    stats.adv_loss *= inv;
    stats.adv_acc = static_cast<double>(adv_hits) * inv;
  } else {
    stats.adv_loss = stats.clean_loss;
    stats.adv_acc = stats.clean_acc;
  }
  return stats;
}

}  // namespace

std::vector<EpochMetrics> train(SemanticSystem& sys, const Dataset& data,
                                const TrainConfig& cfg) {
  cfg.validate();
  if (data.train.empty()) throw DataError("train: empty training set");
  if (sys.model.head.kind == HeadKind::classification) {
    for (const auto& item : data.train)
      if (item.label >= sys.config.model.num_classes)
        throw DataError("train: label " + std::to_string(item.label) +
                        " outside the " +
                        std::to_string(sys.config.model.num_classes) +
                        "-class head");
  }

  RngStream mask_rng(cfg.seed, StreamLabel::mask);
  RngStream channel_rng(cfg.seed, StreamLabel::channel);
  RngStream data_rng(cfg.seed, StreamLabel::data);
  const ChannelConfig* channel = cfg.channel ? &*cfg.channel : nullptr;
  std::vector<Tensor> params = sys.trainable_parameters();

  std::vector<EpochMetrics> history;
  std::vector<std::size_t> order(data.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<std::size_t> usage;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    data_rng.shuffle(order);
    if (sys.codebook) usage.assign(sys.codebook->size(), 0);
    double last_nu_ratio = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size) {
      std::size_t stop = std::min(start + cfg.batch_size, order.size());

      // Mask draw happens once per sample; the attack sees the very plan the
      // transmission will use.
      std::vector<PreparedSample> batch;
      batch.reserve(stop - start);
      for (std::size_t k = start; k < stop; ++k) {
        const LabeledImage& item = data.train[order[k]];
        batch.push_back(prepare_sample(sys, item.image, item.label, mask_rng));
      }

      if (cfg.mode != TrainMode::standard) {
        for (auto& sample : batch) {
          auto delta = generate_semantic_noise(sample_loss_fn(sys, sample),
                                               sample.image, cfg.attack);
          sample.image = apply_perturbation(sample.image, delta);
        }
      }

      WeightPerturbation nu;
      bool perturbed = cfg.mode == TrainMode::awp && cfg.gamma > 0.0;
      if (perturbed) {
        nu = perturb_weights(sys, batch, cfg.gamma);
        apply_weight_perturbation(sys, nu, +1.0);
        last_nu_ratio = nu.ratio;
      }

      std::vector<Tensor> losses;
      losses.reserve(batch.size());
      for (const auto& sample : batch) {
        TrainForward fwd = train_forward(sys, sample.image, sample.plan,
                                         channel, &channel_rng);
        if (sys.codebook)
          for (std::size_t idx : fwd.sent_indices) ++usage[idx];
        losses.push_back(train_loss(sys, fwd, sample));
      }
      mean_of(losses).backward();
      if (cfg.grad_clip > 0.0) clip_grad_norm(params, cfg.grad_clip);
      sgd_step(params, cfg.lr);
      if (perturbed) apply_weight_perturbation(sys, nu, -1.0);
    }

    EvalStats stats = eval_on_subset(sys, data, cfg, epoch);
    history.push_back({epoch, stats.clean_loss, stats.adv_loss,
                       stats.clean_acc, stats.adv_acc, last_nu_ratio});
    // The returned system never carries freshly re-seeded, never-trained
    // codewords, hence no restart after the final epoch.
    if (sys.codebook && cfg.codebook_restarts && epoch + 1 < cfg.epochs)
      restart_dead_codes(sys, data, order, usage, cfg.seed, epoch);
  }
  return history;
}

SemanticSystem fine_tune(const SemanticSystem& pretrained, HeadKind head_kind,
                         const Dataset& data, const TrainConfig& cfg,
                         std::vector<EpochMetrics>* metrics) {
  SemanticSystem sys;
  sys.config = pretrained.config;
  sys.model.config = pretrained.model.config;
  sys.model.patch_embed_w = pretrained.model.patch_embed_w.detach_copy(true);
  sys.model.patch_embed_b = pretrained.model.patch_embed_b.detach_copy(true);
  sys.model.pos_embed = pretrained.model.pos_embed.detach_copy(true);
  sys.model.mask_token = pretrained.model.mask_token.detach_copy(true);
  for (const auto& block : pretrained.model.blocks) {
    TransformerBlockParams b;
    b.ln1_gamma = block.ln1_gamma.detach_copy(true);
    b.ln1_beta = block.ln1_beta.detach_copy(true);
    b.wq = block.wq.detach_copy(true);
    b.bq = block.bq.detach_copy(true);
    b.wk = block.wk.detach_copy(true);
    b.bk = block.bk.detach_copy(true);
    b.wv = block.wv.detach_copy(true);
    b.bv = block.bv.detach_copy(true);
    b.wo = block.wo.detach_copy(true);
    b.bo = block.bo.detach_copy(true);
    b.ln2_gamma = block.ln2_gamma.detach_copy(true);
    b.ln2_beta = block.ln2_beta.detach_copy(true);
    b.mlp_w1 = block.mlp_w1.detach_copy(true);
    b.mlp_b1 = block.mlp_b1.detach_copy(true);
    b.mlp_w2 = block.mlp_w2.detach_copy(true);
    b.mlp_b2 = block.mlp_b2.detach_copy(true);
    sys.model.blocks.push_back(std::move(b));
  }
  if (pretrained.codebook) {
    Codebook cb;
    cb.vectors = pretrained.codebook->vectors.detach_copy(true);
    cb.beta = pretrained.codebook->beta;
    sys.codebook = cb;
  }
  RngStream head_rng(cfg.seed, StreamLabel::init, 1);
  sys.model.reset_head(head_kind, head_rng);
  auto history = train(sys, data, cfg);
  if (metrics) *metrics = std::move(history);
  return sys;
}

void write_metrics_csv(const std::vector<EpochMetrics>& metrics,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("metrics: cannot open '" + path + "' for writing");
  out << "epoch,clean_loss,adv_loss,clean_acc,adv_acc,nu_ratio\n";
  char line[256];
  for (const auto& m : metrics) {
    std::snprintf(line, sizeof line, "%zu,%.9g,%.9g,%.6f,%.6f,%.9g\n",
                  m.epoch, m.clean_loss, m.adv_loss, m.clean_acc, m.adv_acc,
                  m.nu_ratio);
    out << line;
  }
  if (!out.flush()) throw IoError("metrics: write to '" + path + "' failed");
}

}  // namespace semcom
