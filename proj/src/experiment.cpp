#include "semcom/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "semcom/errors.hpp"
#include "semcom/mae.hpp"
#include "semcom/train.hpp"

namespace semcom {

namespace {

// Task loss of a finished forward pass, computed on plain values.
double output_task_loss(const SemanticSystem& sys, const Tensor& output,
                        const PreparedSample& sample) {
  if (sys.model.head.kind == HeadKind::classification) {
    const auto& logits = output.data();
    double max_logit = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - max_logit);
    return max_logit + std::log(sum) - logits[sample.label];
  }
  const auto& got = output.data();
  const auto& want = sample.target_patches.data();
  if (got.size() != want.size())
    throw ShapeError("evaluate: reconstruction shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    double d = got[i] - want[i];
    acc += d * d;
  }
  return acc / static_cast<double>(got.size());
}

double output_correct(const SemanticSystem& sys, const Tensor& output,
                      const PreparedSample& sample) {
  if (sys.model.head.kind != HeadKind::classification) return 1.0;
  return argmax_index(output) == sample.label ? 1.0 : 0.0;
}

std::size_t index_mismatches(const std::vector<std::size_t>& sent,
                             const std::vector<std::size_t>& received) {
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < sent.size(); ++i)
    if (sent[i] != received[i]) ++wrong;
  return wrong;
}

}  // namespace

EvalOutcome evaluate_system(SemanticSystem& sys,
                            const std::vector<LabeledImage>& samples,
                            const ChannelConfig* channel,
                            const AttackConfig* attack, std::uint64_t seed) {
  if (samples.empty()) throw DataError("evaluate: empty sample set");
  if (channel) channel->validate();
  bool attacked = attack != nullptr && attack->epsilon > 0.0;
  if (attacked) attack->validate();

  RngStream mask_base(seed, StreamLabel::mask);
  RngStream channel_base(seed, StreamLabel::channel);

  EvalOutcome out;
  std::size_t clean_correct = 0;
  std::size_t adv_correct = 0;
  std::size_t wrong_indices = 0;
  std::size_t total_indices = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    RngStream mask_rng = mask_base.fork(i);
    PreparedSample prep =
        prepare_sample(sys, samples[i].image, samples[i].label, mask_rng);

    RngStream clean_rng = channel_base.fork(i);
    EvalForward clean = eval_forward(sys, prep.image, prep.plan, channel,
                                     channel ? &clean_rng : nullptr);
    out.clean_loss += output_task_loss(sys, clean.output, prep);
    clean_correct +=
        static_cast<std::size_t>(output_correct(sys, clean.output, prep));
    wrong_indices += index_mismatches(clean.sent_indices, clean.received_indices);
    total_indices += clean.sent_indices.size();
    if (i == 0 && sys.codebook)
      out.symbols_per_image =
          count_overhead_indices(sys.config.model.num_patches(),
                                 sys.config.model.masking_ratio,
                                 sys.codebook->bits_per_index());

    if (attacked) {
      LossFn loss = sample_loss_fn(sys, prep);
      std::vector<double> delta =
          generate_semantic_noise(loss, prep.image, *attack);
      Tensor adv_image = apply_perturbation(prep.image, delta);
      // Same link realization as the clean pass, so rows differ only by the
      // perturbation.
      RngStream adv_rng = channel_base.fork(i);
      EvalForward adv = eval_forward(sys, adv_image, prep.plan, channel,
                                     channel ? &adv_rng : nullptr);
      out.adv_loss += output_task_loss(sys, adv.output, prep);
      adv_correct +=
          static_cast<std::size_t>(output_correct(sys, adv.output, prep));
    }
  }

  double n = static_cast<double>(samples.size());
  out.clean_acc = static_cast<double>(clean_correct) / n;
  out.clean_loss /= n;
  if (attacked) {
    out.adv_acc = static_cast<double>(adv_correct) / n;
    out.adv_loss /= n;
  } else {
    out.adv_acc = out.clean_acc;
    out.adv_loss = out.clean_loss;
  }
  out.index_error_rate =
      total_indices == 0 ? 0.0
                         : static_cast<double>(wrong_indices) /
                               static_cast<double>(total_indices);
  return out;
}

EvalOutcome evaluate_raw_feature_baseline(
    SemanticSystem& sys, const std::vector<LabeledImage>& samples,
    const ChannelConfig* channel, std::uint64_t seed) {
  if (samples.empty()) throw DataError("evaluate: empty sample set");
  if (channel) channel->validate();
  constexpr double kLo = -4.0;
  constexpr double kHi = 4.0;
  constexpr std::size_t kBits = 8;

  RngStream mask_base(seed, StreamLabel::mask);
  RngStream channel_base(seed, StreamLabel::channel);

  EvalOutcome out;
  std::size_t correct = 0;
  std::size_t wrong_bytes = 0;
  std::size_t total_bytes = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    RngStream mask_rng = mask_base.fork(i);
    PreparedSample prep =
        prepare_sample(sys, samples[i].image, samples[i].label, mask_rng);

    Tensor z_e = encode(prep.image, prep.plan, sys.model);
    IndexFrame frame;
    frame.bits_per_index = kBits;
    frame.indices.reserve(z_e.numel());
    for (double v : z_e.data()) {
      double scaled = (v - kLo) / (kHi - kLo) * 255.0;
      double q = std::llround(std::min(255.0, std::max(0.0, scaled)));
      frame.indices.push_back(static_cast<std::size_t>(q));
    }

    std::vector<std::size_t> received = frame.indices;
    if (channel) {
      RngStream link_rng = channel_base.fork(i);
      received = transmit_indices(frame, *channel, link_rng).indices;
    }
    wrong_bytes += index_mismatches(frame.indices, received);
    total_bytes += frame.indices.size();
    if (i == 0)
      out.symbols_per_image = z_e.numel() * kBits / 4;

    std::vector<double> values(received.size());
    for (std::size_t j = 0; j < received.size(); ++j)
      values[j] = static_cast<double>(received[j]) / 255.0 * (kHi - kLo) + kLo;
    Tensor features = Tensor::from_data(z_e.shape(), std::move(values));
    Tensor tokens = assemble_decoder_input(features, prep.plan, sys.model);
    Tensor output = decode(tokens, sys.model);
    out.clean_loss += output_task_loss(sys, output, prep);
    correct += static_cast<std::size_t>(output_correct(sys, output, prep));
  }

  double n = static_cast<double>(samples.size());
  out.clean_acc = static_cast<double>(correct) / n;
  out.clean_loss /= n;
  out.adv_acc = out.clean_acc;
  out.adv_loss = out.clean_loss;
  out.index_error_rate = total_bytes == 0
                             ? 0.0
                             : static_cast<double>(wrong_bytes) /
                                   static_cast<double>(total_bytes);
  return out;
}

EvalReport run_snr_sweep(SemanticSystem& sys,
                         const std::vector<LabeledImage>& samples,
                         const ChannelConfig& base,
                         const std::vector<double>& snrs_db,
                         const AttackConfig* attack, std::uint64_t seed) {
  EvalReport report;
  report.x_name = "snr_db";
  for (double snr : snrs_db) {
    ChannelConfig link = base;
    link.snr_db = snr;
    ReportRow row;
    row.x = snr;
    row.outcome = evaluate_system(sys, samples, &link, attack, seed);
    report.rows.push_back(std::move(row));
  }
  return report;
}

EvalReport run_epsilon_sweep(
    const std::vector<std::pair<std::string, SemanticSystem*>>& variants,
    const std::vector<LabeledImage>& samples,
    const std::vector<double>& epsilons, const AttackConfig& base,
    const ChannelConfig* channel, std::uint64_t seed) {
  if (variants.empty()) throw ContractError("epsilon sweep: no variants");
  EvalReport report;
  report.x_name = "epsilon";
  report.label_name = "variant";
  for (double eps : epsilons) {
    AttackConfig attack = base;
    attack.epsilon = eps;
    for (const auto& [name, sys] : variants) {
      ReportRow row;
      row.label = name;
      row.x = eps;
      row.outcome = evaluate_system(*sys, samples, channel,
                                    eps > 0.0 ? &attack : nullptr, seed);
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

EvalReport run_channel_generalization(SemanticSystem& sys,
                                      const std::vector<LabeledImage>& samples,
                                      const std::vector<double>& snrs_db,
                                      double rician_k, std::uint64_t seed) {
  EvalReport report;
  report.x_name = "snr_db";
  report.label_name = "channel";
  for (ChannelFamily family : {ChannelFamily::awgn, ChannelFamily::rayleigh,
                               ChannelFamily::rician}) {
    ChannelConfig link;
    link.family = family;
    link.rician_k = rician_k;
    for (double snr : snrs_db) {
      link.snr_db = snr;
      ReportRow row;
      row.label = channel_family_name(family);
      row.x = snr;
      row.outcome = evaluate_system(sys, samples, &link, nullptr, seed);
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

void write_report_csv(const EvalReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report: " + path);
  if (!report.label_name.empty()) out << report.label_name << ",";
  out << report.x_name
      << ",clean_acc,adv_acc,clean_loss,adv_loss,index_error_rate,"
         "symbols_per_image\n";
  char buf[256];
  for (const ReportRow& row : report.rows) {
    if (!report.label_name.empty()) out << row.label << ",";
    const EvalOutcome& o = row.outcome;
    std::snprintf(buf, sizeof(buf), "%.9g,%.6f,%.6f,%.9g,%.9g,%.6f,%zu\n",
                  row.x, o.clean_acc, o.adv_acc, o.clean_loss, o.adv_loss,
                  o.index_error_rate, o.symbols_per_image);
    out << buf;
  }
  if (!out) throw IoError("failed writing report: " + path);
}

void write_overhead_table(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report: " + path);
  std::size_t reference = count_overhead_reference(5108, 0.5);
  std::size_t semantic = count_overhead_indices(196, 0.5, 8);
  out << "scheme,symbols_per_image,percent_of_reference\n";
  out << "jpeg_ldpc_reference," << reference << ","
      << overhead_percent_string(reference, reference) << "\n";
  out << "mae_codebook," << semantic << ","
      << overhead_percent_string(semantic, reference) << "\n";
  if (!out) throw IoError("failed writing report: " + path);
}

}  // namespace semcom
