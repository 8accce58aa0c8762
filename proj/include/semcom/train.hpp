#ifndef SEMCOM_TRAIN_HPP
#define SEMCOM_TRAIN_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "semcom/attack.hpp"
#include "semcom/channel.hpp"
#include "semcom/dataset.hpp"
#include "semcom/pipeline.hpp"

namespace semcom {

enum class TrainMode { standard, adversarial, awp };

std::string train_mode_name(TrainMode mode);
TrainMode train_mode_from_name(const std::string& name);

struct TrainConfig {
  TrainMode mode = TrainMode::standard;
  std::size_t epochs = 10;
  std::size_t batch_size = 16;
  double lr = 0.05;
  double grad_clip = 1.0;  // global gradient-norm ceiling; 0 disables
  AttackConfig attack;                   // adversarial and awp modes
  double gamma = 0.005;                  // weight-perturbation budget, awp
  std::optional<ChannelConfig> channel;  // link noise inside training
  std::uint64_t seed = 1;
  std::size_t eval_subset = 64;  // test samples behind the epoch metrics
  // Re-seed unused codewords from encoder outputs between epochs; guards
  // against quantizer collapse on low-diversity features.
  bool codebook_restarts = true;

  void validate() const;  // throws ConfigError
  bool operator==(const TrainConfig&) const = default;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double clean_loss = 0.0;
  double adv_loss = 0.0;
  double clean_acc = 0.0;
  double adv_acc = 0.0;
  double nu_ratio = 0.0;  // ||nu|| / ||theta|| of the final batch, <= gamma
};

// Per-tensor weight perturbation over the network parameters, scaled so each
// tensor sits on its constraint boundary ||nu_l|| = gamma * ||theta_l||.
struct WeightPerturbation {
  std::vector<std::vector<double>> nu;  // network_parameters() order
  double ratio = 0.0;                   // global ||nu|| / ||theta||
};

// Loss-ascent direction from one forward/backward pass over the (already
// attacked) batch at the current weights, channel-free. Zero-gradient layers
// get a zero perturbation.
WeightPerturbation perturb_weights(SemanticSystem& sys,
                                   const std::vector<PreparedSample>& batch,
                                   double gamma);

void apply_weight_perturbation(SemanticSystem& sys,
                               const WeightPerturbation& p, double sign);

// Runs cfg.epochs over the dataset. standard: plain SGD on clean batches.
// adversarial: per sample, generate the budgeted perturbation against the
// frozen system, then step on the attacked batch. awp: additionally perturb
// the weights to their loss-ascent boundary before the step gradient is
// taken, and undo the perturbation after the update. With epsilon = 0 and
// gamma = 0 all three produce bit-identical trajectories under one seed.
std::vector<EpochMetrics> train(SemanticSystem& sys, const Dataset& data,
                                const TrainConfig& cfg);

// Reconstruction-pretrained encoder, fresh task head, then train(). The
// encoder weights of `pretrained` are copied bit-exactly.
SemanticSystem fine_tune(const SemanticSystem& pretrained, HeadKind head_kind,
                         const Dataset& data, const TrainConfig& cfg,
                         std::vector<EpochMetrics>* metrics = nullptr);

// Attack closure for one prepared sample against the frozen system:
// channel-free gradient-tracking forward, task plus quantization terms.
LossFn sample_loss_fn(SemanticSystem& sys, const PreparedSample& sample);

void write_metrics_csv(const std::vector<EpochMetrics>& metrics,
                       const std::string& path);

}  // namespace semcom

#endif  // SEMCOM_TRAIN_HPP
