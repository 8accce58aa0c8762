#include "semcom/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "semcom/checkpoint.hpp"
#include "semcom/config.hpp"
#include "semcom/dataset.hpp"
#include "semcom/errors.hpp"
#include "semcom/experiment.hpp"
#include "semcom/train.hpp"

namespace semcom {

namespace {

Dataset load_data(const ExperimentConfig& cfg) {
  if (cfg.dataset.kind == "cifar10")
    return load_cifar10(cfg.dataset.cifar_dir, cfg.dataset.cifar_train_limit,
                        cfg.dataset.cifar_test_limit, cfg.seed);
  return make_synthetic(cfg.dataset.synthetic, cfg.seed);
}

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.output_dir);
  return (std::filesystem::path(cfg.output_dir) / name).string();
}

void print_outcome(const EvalOutcome& o) {
  std::printf(
      "clean_acc=%.4f adv_acc=%.4f clean_loss=%.6g adv_loss=%.6g "
      "index_error_rate=%.4f symbols_per_image=%zu\n",
      o.clean_acc, o.adv_acc, o.clean_loss, o.adv_loss, o.index_error_rate,
      o.symbols_per_image);
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{
      "Masked-autoencoder semantic communication with a shared discrete "
      "codebook over a simulated 16-QAM link"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed_cli = 0;
  std::string output_dir_cli;
  auto* config_opt =
      app.add_option("--config", config_path, "experiment config file (INI)");
  auto* seed_opt = app.add_option(
      "--seed", seed_cli, "override the experiment and training seed");
  auto* outdir_opt = app.add_option("--output-dir", output_dir_cli,
                                    "override the output directory");

  std::size_t epochs_cli = 0;
  std::string mode_cli = "standard";
  std::string checkpoint_path;
  std::string channel_cli = "none";
  double epsilon_cli = 0.0;
  double snr_cli = 0.0;
  std::vector<double> snrs_cli;
  std::vector<double> epsilons_cli;
  std::string ck_standard, ck_adversarial, ck_awp;

  auto* pretrain = app.add_subcommand(
      "pretrain", "train the masked autoencoder on reconstruction");
  auto* pre_epochs =
      pretrain->add_option("--epochs", epochs_cli, "override training epochs");

  auto* finetune = app.add_subcommand(
      "finetune", "attach a classifier head to a pretrained encoder");
  finetune->add_option("--checkpoint", checkpoint_path,
                       "pretrained model (default <output_dir>/pretrained.ckpt)");
  auto* ft_mode = finetune->add_option(
      "--mode", mode_cli, "standard, adversarial, or awp");
  auto* ft_epochs =
      finetune->add_option("--epochs", epochs_cli, "override training epochs");

  auto* attack_eval = app.add_subcommand(
      "attack-eval", "evaluate a trained classifier under the input attack");
  attack_eval
      ->add_option("--checkpoint", checkpoint_path, "trained model to evaluate")
      ->required();
  auto* ae_eps = attack_eval->add_option("--epsilon", epsilon_cli,
                                         "override the attack budget");
  attack_eval->add_option(
      "--channel", channel_cli,
      "link family for the evaluation (none, awgn, rayleigh, rician)");
  auto* ae_snr =
      attack_eval->add_option("--snr-db", snr_cli, "override the link SNR");

  auto* sweep_snr = app.add_subcommand(
      "sweep-snr", "accuracy vs link SNR; writes fig4_snr.csv");
  sweep_snr
      ->add_option("--checkpoint", checkpoint_path, "trained model to evaluate")
      ->required();
  sweep_snr->add_option("--snrs", snrs_cli,
                        "SNR grid in dB (default -6 0 6 12 18)");

  auto* sweep_eps = app.add_subcommand(
      "sweep-eps",
      "accuracy vs attack budget per training variant; writes fig5_eps.csv");
  sweep_eps->add_option("--standard", ck_standard,
                        "default <output_dir>/finetuned_standard.ckpt");
  sweep_eps->add_option("--adversarial", ck_adversarial,
                        "default <output_dir>/finetuned_adversarial.ckpt");
  sweep_eps->add_option("--awp", ck_awp,
                        "default <output_dir>/finetuned_awp.ckpt");
  sweep_eps->add_option("--epsilons", epsilons_cli,
                        "budget grid (default 0 0.006 0.012 0.02)");
  sweep_eps->add_option(
      "--channel", channel_cli,
      "link family for the evaluation (none, awgn, rayleigh, rician)");

  auto* sweep_channel = app.add_subcommand(
      "sweep-channel",
      "one model across awgn/rayleigh/rician; writes fig6_channels.csv");
  sweep_channel
      ->add_option("--checkpoint", checkpoint_path, "trained model to evaluate")
      ->required();
  sweep_channel->add_option("--snrs", snrs_cli,
                            "SNR grid in dB (default -6 0 6 12 18)");

  auto* overhead = app.add_subcommand(
      "overhead",
      "transmission-cost accounting; writes table1_overhead.csv");

  // Global options remain usable after the subcommand name.
  for (CLI::App* sub : app.get_subcommands([](CLI::App*) { return true; }))
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    ExperimentConfig cfg = config_opt->count() > 0
                               ? read_experiment_config(config_path)
                               : ExperimentConfig{};
    if (seed_opt->count() > 0) {
      cfg.seed = seed_cli;
      cfg.train.seed = seed_cli;
    }
    if (outdir_opt->count() > 0) cfg.output_dir = output_dir_cli;
    cfg.validate();

    if (snrs_cli.empty()) snrs_cli = {-6.0, 0.0, 6.0, 12.0, 18.0};
    if (epsilons_cli.empty()) epsilons_cli = {0.0, 0.006, 0.012, 0.02};
    const ChannelConfig* eval_channel = nullptr;
    if (channel_cli != "none") {
      cfg.channel.family = channel_family_from_name(channel_cli);
      eval_channel = &cfg.channel;
    }

    if (pretrain->parsed()) {
      cfg.train.mode = TrainMode::standard;
      if (pre_epochs->count() > 0) cfg.train.epochs = epochs_cli;
      Dataset data = load_data(cfg);
      RngStream init_rng(cfg.seed, StreamLabel::init);
      SemanticSystem sys =
          SemanticSystem::init(cfg.system, HeadKind::reconstruction, init_rng);
      std::vector<EpochMetrics> metrics = train(sys, data, cfg.train);
      save_system(sys, out_path(cfg, "pretrained.ckpt"));
      write_metrics_csv(metrics, out_path(cfg, "pretrain_metrics.csv"));
      std::printf("pretrained %zu epochs, final reconstruction loss %.6g\n",
                  cfg.train.epochs, metrics.back().clean_loss);
    } else if (finetune->parsed()) {
      if (ft_mode->count() > 0) cfg.train.mode = train_mode_from_name(mode_cli);
      if (ft_epochs->count() > 0) cfg.train.epochs = epochs_cli;
      if (checkpoint_path.empty())
        checkpoint_path = out_path(cfg, "pretrained.ckpt");
      SemanticSystem pre = load_system(checkpoint_path);
      Dataset data = load_data(cfg);
      std::vector<EpochMetrics> metrics;
      SemanticSystem sys = fine_tune(pre, HeadKind::classification, data,
                                     cfg.train, &metrics);
      std::string mode = train_mode_name(cfg.train.mode);
      save_system(sys, out_path(cfg, "finetuned_" + mode + ".ckpt"));
      write_metrics_csv(metrics,
                        out_path(cfg, "finetune_" + mode + "_metrics.csv"));
      std::printf("finetuned (%s) %zu epochs, clean_acc=%.4f adv_acc=%.4f\n",
                  mode.c_str(), cfg.train.epochs, metrics.back().clean_acc,
                  metrics.back().adv_acc);
    } else if (attack_eval->parsed()) {
      SemanticSystem sys = load_system(checkpoint_path);
      Dataset data = load_data(cfg);
      AttackConfig attack = cfg.train.attack;
      if (ae_eps->count() > 0) attack.epsilon = epsilon_cli;
      if (ae_snr->count() > 0) cfg.channel.snr_db = snr_cli;
      EvalOutcome o =
          evaluate_system(sys, data.test, eval_channel, &attack, cfg.seed);
      print_outcome(o);
    } else if (sweep_snr->parsed()) {
      SemanticSystem sys = load_system(checkpoint_path);
      Dataset data = load_data(cfg);
      EvalReport report = run_snr_sweep(sys, data.test, cfg.channel, snrs_cli,
                                        nullptr, cfg.seed);
      std::string path = out_path(cfg, "fig4_snr.csv");
      write_report_csv(report, path);
      std::printf("wrote %s\n", path.c_str());
    } else if (sweep_eps->parsed()) {
      if (ck_standard.empty())
        ck_standard = out_path(cfg, "finetuned_standard.ckpt");
      if (ck_adversarial.empty())
        ck_adversarial = out_path(cfg, "finetuned_adversarial.ckpt");
      if (ck_awp.empty()) ck_awp = out_path(cfg, "finetuned_awp.ckpt");
      SemanticSystem standard = load_system(ck_standard);
      SemanticSystem adversarial = load_system(ck_adversarial);
      SemanticSystem awp = load_system(ck_awp);
      Dataset data = load_data(cfg);
      std::vector<std::pair<std::string, SemanticSystem*>> variants = {
          {"standard", &standard},
          {"adversarial", &adversarial},
          {"awp", &awp}};
      EvalReport report =
          run_epsilon_sweep(variants, data.test, epsilons_cli,
                            cfg.train.attack, eval_channel, cfg.seed);
      std::string path = out_path(cfg, "fig5_eps.csv");
      write_report_csv(report, path);
      std::printf("wrote %s\n", path.c_str());
    } else if (sweep_channel->parsed()) {
      SemanticSystem sys = load_system(checkpoint_path);
      Dataset data = load_data(cfg);
      EvalReport report = run_channel_generalization(
          sys, data.test, snrs_cli, cfg.channel.rician_k, cfg.seed);
      std::string path = out_path(cfg, "fig6_channels.csv");
      write_report_csv(report, path);
      std::printf("wrote %s\n", path.c_str());
    } else if (overhead->parsed()) {
      std::size_t reference = count_overhead_reference(5108, 0.5);
      std::size_t semantic = count_overhead_indices(196, 0.5, 8);
      std::string path = out_path(cfg, "table1_overhead.csv");
      write_overhead_table(path);
      std::printf("jpeg_ldpc_reference: %zu symbols/image\n", reference);
      std::printf("mae_codebook: %zu symbols/image (%s%% of reference)\n",
                  semantic,
                  overhead_percent_string(semantic, reference).c_str());
      std::printf("wrote %s\n", path.c_str());
    }
    return 0;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 3;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
}

}  // namespace semcom
