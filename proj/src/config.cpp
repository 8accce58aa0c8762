#include "semcom/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "semcom/errors.hpp"

namespace semcom {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_size(std::size_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%zu", v);
  return buf;
}

std::string fmt_u64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%llu", static_cast<unsigned long long>(v));
  return buf;
}

std::string fmt_bool(bool v) { return v ? "true" : "false"; }

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void bad_value(const std::string& section, const std::string& key,
                            const std::string& value, const char* expected) {
  throw ConfigError("config key [" + section + "] " + key + ": cannot parse '" +
                    value + "' as " + expected);
}

double parse_double_value(const std::string& section, const std::string& key,
                          const std::string& value) {
  try {
    std::size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) bad_value(section, key, value, "a number");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    bad_value(section, key, value, "a number");
  }
}

std::uint64_t parse_u64_value(const std::string& section,
                              const std::string& key,
                              const std::string& value) {
  try {
    std::size_t pos = 0;
    unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size() || (!value.empty() && value[0] == '-'))
      bad_value(section, key, value, "a non-negative integer");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    bad_value(section, key, value, "a non-negative integer");
  }
}

std::size_t parse_size_value(const std::string& section, const std::string& key,
                             const std::string& value) {
  return static_cast<std::size_t>(parse_u64_value(section, key, value));
}

bool parse_bool_value(const std::string& section, const std::string& key,
                      const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(section, key, value, "a boolean (true/false)");
}

void apply_key(ExperimentConfig& cfg, const std::string& section,
               const std::string& key, const std::string& value) {
  auto dbl = [&] { return parse_double_value(section, key, value); };
  auto sz = [&] { return parse_size_value(section, key, value); };
  auto u64 = [&] { return parse_u64_value(section, key, value); };
  auto flag = [&] { return parse_bool_value(section, key, value); };

  if (section == "experiment") {
    if (key == "seed") {
      cfg.seed = u64();
    } else if (key == "output_dir") {
      cfg.output_dir = value;
    } else {
      throw ConfigError("unknown config key '" + key + "' in [experiment]");
    }
  } else if (section == "model") {
    ModelConfig& m = cfg.system.model;
    if (key == "image_size") m.image_size = sz();
    else if (key == "channels") m.channels = sz();
    else if (key == "patch_size") m.patch_size = sz();
    else if (key == "embed_dim") m.embed_dim = sz();
    else if (key == "encoder_layers") m.encoder_layers = sz();
    else if (key == "attention_heads") m.attention_heads = sz();
    else if (key == "mlp_ratio") m.mlp_ratio = dbl();
    else if (key == "decoder_hidden") m.decoder_hidden = sz();
    else if (key == "num_classes") m.num_classes = sz();
    else if (key == "masking_ratio") m.masking_ratio = dbl();
    else throw ConfigError("unknown config key '" + key + "' in [model]");
  } else if (section == "codebook") {
    if (key == "enabled") cfg.system.use_codebook = flag();
    else if (key == "size") cfg.system.codebook_size = sz();
    else if (key == "beta") cfg.system.codebook_beta = dbl();
    else throw ConfigError("unknown config key '" + key + "' in [codebook]");
  } else if (section == "attack") {
    AttackConfig& a = cfg.train.attack;
    if (key == "epsilon") a.epsilon = dbl();
    else if (key == "steps") a.steps = sz();
    else if (key == "alpha") a.alpha = dbl();
    else if (key == "norm") a.norm_order = static_cast<int>(u64());
    else throw ConfigError("unknown config key '" + key + "' in [attack]");
  } else if (section == "train") {
    TrainConfig& t = cfg.train;
    if (key == "mode") {
      t.mode = train_mode_from_name(value);
    } else if (key == "epochs") {
      t.epochs = sz();
    } else if (key == "batch_size") {
      t.batch_size = sz();
    } else if (key == "lr") {
      t.lr = dbl();
    } else if (key == "grad_clip") {
      t.grad_clip = dbl();
    } else if (key == "gamma") {
      t.gamma = dbl();
    } else if (key == "seed") {
      t.seed = u64();
    } else if (key == "eval_subset") {
      t.eval_subset = sz();
    } else if (key == "codebook_restarts") {
      t.codebook_restarts = flag();
    } else if (key == "channel") {
      if (value == "none") {
        t.channel.reset();
      } else {
        ChannelConfig link;
        link.family = channel_family_from_name(value);
        t.channel = link;
      }
    } else if (key == "channel_snr_db" || key == "channel_rician_k") {
      if (!t.channel)
        throw ConfigError("config key [train] " + key +
                          ": set [train] channel to a family first");
      if (key == "channel_snr_db") t.channel->snr_db = dbl();
      else t.channel->rician_k = dbl();
    } else {
      throw ConfigError("unknown config key '" + key + "' in [train]");
    }
  } else if (section == "channel") {
    ChannelConfig& c = cfg.channel;
    if (key == "family") c.family = channel_family_from_name(value);
    else if (key == "snr_db") c.snr_db = dbl();
    else if (key == "rician_k") c.rician_k = dbl();
    else throw ConfigError("unknown config key '" + key + "' in [channel]");
  } else if (section == "dataset") {
    DatasetConfig& d = cfg.dataset;
    SyntheticSpec& s = d.synthetic;
    if (key == "kind") d.kind = value;
    else if (key == "cifar_dir") d.cifar_dir = value;
    else if (key == "cifar_train_limit") d.cifar_train_limit = sz();
    else if (key == "cifar_test_limit") d.cifar_test_limit = sz();
    else if (key == "classes") s.classes = sz();
    else if (key == "image_size") s.image_size = sz();
    else if (key == "channels") s.channels = sz();
    else if (key == "train_per_class") s.train_per_class = sz();
    else if (key == "test_per_class") s.test_per_class = sz();
    else if (key == "amplitude_min") s.amplitude_min = dbl();
    else if (key == "amplitude_max") s.amplitude_max = dbl();
    else if (key == "texture_weight") s.texture_weight = dbl();
    else if (key == "texture_modes") s.texture_modes = sz();
    else if (key == "texture_bias") s.texture_bias = dbl();
    else if (key == "pixel_noise") s.pixel_noise = dbl();
    else throw ConfigError("unknown config key '" + key + "' in [dataset]");
  } else {
    throw ConfigError("unknown config section [" + section + "]");
  }
}

}  // namespace

void DatasetConfig::validate() const {
  if (kind != "synthetic" && kind != "cifar10")
    throw ConfigError("dataset kind must be 'synthetic' or 'cifar10', got '" +
                      kind + "'");
  if (kind == "synthetic") synthetic.validate();
}

void ExperimentConfig::validate() const {
  system.validate();
  train.validate();
  channel.validate();
  dataset.validate();
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

std::string serialize_experiment_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "[experiment]\n";
  out << "seed = " << fmt_u64(cfg.seed) << "\n";
  out << "output_dir = " << cfg.output_dir << "\n";

  const ModelConfig& m = cfg.system.model;
  out << "\n[model]\n";
  out << "image_size = " << fmt_size(m.image_size) << "\n";
  out << "channels = " << fmt_size(m.channels) << "\n";
  out << "patch_size = " << fmt_size(m.patch_size) << "\n";
  out << "embed_dim = " << fmt_size(m.embed_dim) << "\n";
  out << "encoder_layers = " << fmt_size(m.encoder_layers) << "\n";
  out << "attention_heads = " << fmt_size(m.attention_heads) << "\n";
  out << "mlp_ratio = " << fmt_double(m.mlp_ratio) << "\n";
  out << "decoder_hidden = " << fmt_size(m.decoder_hidden) << "\n";
  out << "num_classes = " << fmt_size(m.num_classes) << "\n";
  out << "masking_ratio = " << fmt_double(m.masking_ratio) << "\n";

  out << "\n[codebook]\n";
  out << "enabled = " << fmt_bool(cfg.system.use_codebook) << "\n";
  out << "size = " << fmt_size(cfg.system.codebook_size) << "\n";
  out << "beta = " << fmt_double(cfg.system.codebook_beta) << "\n";

  const AttackConfig& a = cfg.train.attack;
  out << "\n[attack]\n";
  out << "epsilon = " << fmt_double(a.epsilon) << "\n";
  out << "norm = " << a.norm_order << "\n";
  out << "steps = " << fmt_size(a.steps) << "\n";
  out << "alpha = " << fmt_double(a.alpha) << "\n";

  const TrainConfig& t = cfg.train;
  out << "\n[train]\n";
  out << "mode = " << train_mode_name(t.mode) << "\n";
  out << "epochs = " << fmt_size(t.epochs) << "\n";
  out << "batch_size = " << fmt_size(t.batch_size) << "\n";
  out << "lr = " << fmt_double(t.lr) << "\n";
  out << "grad_clip = " << fmt_double(t.grad_clip) << "\n";
  out << "gamma = " << fmt_double(t.gamma) << "\n";
  out << "seed = " << fmt_u64(t.seed) << "\n";
  out << "eval_subset = " << fmt_size(t.eval_subset) << "\n";
  out << "codebook_restarts = " << fmt_bool(t.codebook_restarts) << "\n";
  if (t.channel) {
    out << "channel = " << channel_family_name(t.channel->family) << "\n";
    out << "channel_snr_db = " << fmt_double(t.channel->snr_db) << "\n";
    out << "channel_rician_k = " << fmt_double(t.channel->rician_k) << "\n";
  } else {
    out << "channel = none\n";
  }

  out << "\n[channel]\n";
  out << "family = " << channel_family_name(cfg.channel.family) << "\n";
  out << "snr_db = " << fmt_double(cfg.channel.snr_db) << "\n";
  out << "rician_k = " << fmt_double(cfg.channel.rician_k) << "\n";

  const DatasetConfig& d = cfg.dataset;
  out << "\n[dataset]\n";
  out << "kind = " << d.kind << "\n";
  out << "classes = " << fmt_size(d.synthetic.classes) << "\n";
  out << "image_size = " << fmt_size(d.synthetic.image_size) << "\n";
  out << "channels = " << fmt_size(d.synthetic.channels) << "\n";
  out << "train_per_class = " << fmt_size(d.synthetic.train_per_class) << "\n";
  out << "test_per_class = " << fmt_size(d.synthetic.test_per_class) << "\n";
  out << "amplitude_min = " << fmt_double(d.synthetic.amplitude_min) << "\n";
  out << "amplitude_max = " << fmt_double(d.synthetic.amplitude_max) << "\n";
  out << "texture_weight = " << fmt_double(d.synthetic.texture_weight) << "\n";
  out << "texture_bias = " << fmt_double(d.synthetic.texture_bias) << "
";
  out << "texture_modes = " << fmt_size(d.synthetic.texture_modes) << "\n";
  out << "pixel_noise = " << fmt_double(d.synthetic.pixel_noise) << "\n";
  out << "cifar_dir = " << d.cifar_dir << "\n";
  out << "cifar_train_limit = " << fmt_size(d.cifar_train_limit) << "\n";
  out << "cifar_test_limit = " << fmt_size(d.cifar_test_limit) << "\n";
  return out.str();
}

ExperimentConfig parse_experiment_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + fmt_size(lineno) +
                          ": unterminated section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + fmt_size(lineno) +
                        ": expected 'key = value', got '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + fmt_size(lineno) + ": empty key");
    if (section.empty())
      throw ConfigError("config line " + fmt_size(lineno) + ": key '" + key +
                        "' appears before any [section] header");
    apply_key(cfg, section, key, value);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig read_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str());
}

void write_experiment_config(const ExperimentConfig& cfg,
                             const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config file: " + path);
  out << serialize_experiment_config(cfg);
  if (!out) throw IoError("failed writing config file: " + path);
}

}  // namespace semcom
