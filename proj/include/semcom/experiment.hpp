#pragma once

// Evaluation harness: runs a trained system over a held-out set, optionally
// through a simulated link and/or under the gradient-sign input attack, and
// writes the CSV reports behind the headline results (accuracy vs SNR,
// accuracy vs attack budget per training variant, cross-channel
// generalization, and the transmission-overhead table).
//
// Determinism: every sweep cell derives its randomness from (seed, stream
// label, sample index) forks, so repeated runs produce byte-identical CSVs.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "semcom/attack.hpp"
#include "semcom/channel.hpp"
#include "semcom/dataset.hpp"
#include "semcom/pipeline.hpp"

namespace semcom {

struct EvalOutcome {
  double clean_acc = 0.0;
  double adv_acc = 0.0;   // equals clean_acc when no attack is applied
  double clean_loss = 0.0;
  double adv_loss = 0.0;
  double index_error_rate = 0.0;  // received vs sent indices, clean pass
  std::size_t symbols_per_image = 0;
};

// Per-sample protocol: fork the mask stream, run the deployment forward
// through the link (if any), and, when attacking, craft the perturbation
// white-box and channel-free before sending it over the same link
// realization as the clean pass.
EvalOutcome evaluate_system(SemanticSystem& sys,
                            const std::vector<LabeledImage>& samples,
                            const ChannelConfig* channel,
                            const AttackConfig* attack, std::uint64_t seed);

// Ablation without the discrete codebook: encoder features are quantized to
// 8-bit fixed point on [-4, 4] per dimension and every byte is transmitted,
// costing embed_dim bytes per kept patch instead of one index.
EvalOutcome evaluate_raw_feature_baseline(SemanticSystem& sys,
                                          const std::vector<LabeledImage>& samples,
                                          const ChannelConfig* channel,
                                          std::uint64_t seed);

struct ReportRow {
  std::string label;  // variant or channel family; empty in unlabeled reports
  double x = 0.0;     // sweep coordinate (SNR in dB, or attack budget)
  EvalOutcome outcome;
};

struct EvalReport {
  std::string x_name;      // column name of the sweep coordinate
  std::string label_name;  // empty when rows carry no label column
  std::vector<ReportRow> rows;
};

// Accuracy vs link SNR at a fixed channel family.
EvalReport run_snr_sweep(SemanticSystem& sys,
                         const std::vector<LabeledImage>& samples,
                         const ChannelConfig& base,
                         const std::vector<double>& snrs_db,
                         const AttackConfig* attack, std::uint64_t seed);

// Accuracy vs attack budget for several trained variants side by side.
EvalReport run_epsilon_sweep(
    const std::vector<std::pair<std::string, SemanticSystem*>>& variants,
    const std::vector<LabeledImage>& samples,
    const std::vector<double>& epsilons, const AttackConfig& base,
    const ChannelConfig* channel, std::uint64_t seed);

// One system evaluated across all three channel families and an SNR grid.
EvalReport run_channel_generalization(SemanticSystem& sys,
                                      const std::vector<LabeledImage>& samples,
                                      const std::vector<double>& snrs_db,
                                      double rician_k, std::uint64_t seed);

void write_report_csv(const EvalReport& report, const std::string& path);

// Transmission-cost table: a source-coded baseline (5108-byte payload at
// rate-1/2 coding) against codebook indices for the kept patches, both in
// 16-QAM symbols, with the truncated percentage string.
void write_overhead_table(const std::string& path);

}  // namespace semcom
