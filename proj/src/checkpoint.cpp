#include "semcom/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include "semcom/errors.hpp"

namespace semcom {

namespace {

constexpr char kMagic[4] = {'S', 'C', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw IoError("checkpoint: cannot open '" + path + "' for writing");
    path_ = path;
  }
  void bytes(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  void u32(std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 4);
  }
  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 8);
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void finish() {
    out_.flush();
    if (!out_) throw IoError("checkpoint: write to '" + path_ + "' failed");
  }

 private:
  std::ofstream out_;
  std::string path_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) throw IoError("checkpoint: cannot open '" + path + "'");
    path_ = path;
  }
  std::size_t offset() const { return offset_; }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw DataError("checkpoint '" + path_ + "': truncated at byte " +
                      std::to_string(offset_));
    offset_ += n;
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  std::uint64_t u64() {
    unsigned char b[8];
    bytes(b, 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  std::string str() {
    std::uint32_t n = u32();
    std::string s(n, '\0');
    if (n) bytes(s.data(), n);
    return s;
  }
  double f64() {
    std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  bool at_end() {
    return in_.peek() == std::char_traits<char>::eof();
  }

 private:
  std::ifstream in_;
  std::string path_;
  std::size_t offset_ = 0;
};

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw DataError("checkpoint: bad numeric value '" + v + "' for " + key);
  }
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    unsigned long long n = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return static_cast<std::size_t>(n);
  } catch (const std::exception&) {
    throw DataError("checkpoint: bad integer value '" + v + "' for " + key);
  }
}

const std::string& require_key(const std::map<std::string, std::string>& cfg,
                               const std::string& key) {
  auto it = cfg.find(key);
  if (it == cfg.end())
    throw DataError("checkpoint: missing config key '" + key + "'");
  return it->second;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  Writer w(path);
  w.bytes(kMagic, 4);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(ckpt.config.size()));
  for (const auto& [k, v] : ckpt.config) {
    w.str(k);
    w.str(v);
  }
  w.u32(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    w.str(name);
    const Shape& s = t.shape();
    w.u32(static_cast<std::uint32_t>(s.size()));
    for (std::size_t d : s) w.u64(d);
    for (double v : t.data()) w.f64(v);
  }
  w.finish();
}

Checkpoint load_checkpoint(const std::string& path) {
  Reader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("checkpoint '" + path + "': bad magic at byte 0");
  std::uint32_t version = r.u32();
  if (version != kVersion)
    throw DataError("checkpoint '" + path + "': unsupported version " +
                    std::to_string(version));
  Checkpoint ckpt;
  std::uint32_t nconfig = r.u32();
  for (std::uint32_t i = 0; i < nconfig; ++i) {
    std::string k = r.str();
    ckpt.config[k] = r.str();
  }
  std::uint32_t ntensors = r.u32();
  for (std::uint32_t i = 0; i < ntensors; ++i) {
    std::string name = r.str();
    std::uint32_t rank = r.u32();
    Shape shape(rank);
    for (std::uint32_t d = 0; d < rank; ++d)
      shape[d] = static_cast<std::size_t>(r.u64());
    std::size_t n = shape_numel(shape);
    std::vector<double> data(n);
    for (std::size_t j = 0; j < n; ++j) data[j] = r.f64();
    ckpt.tensors.emplace_back(name,
                              Tensor::from_data(std::move(shape),
                                                std::move(data), true));
  }
  if (!r.at_end())
    throw DataError("checkpoint '" + path + "': trailing bytes at offset " +
                    std::to_string(r.offset()));
  return ckpt;
}

void save_system(const SemanticSystem& sys, const std::string& path) {
  const ModelConfig& m = sys.config.model;
  Checkpoint ckpt;
  ckpt.config["image_size"] = std::to_string(m.image_size);
  ckpt.config["channels"] = std::to_string(m.channels);
  ckpt.config["patch_size"] = std::to_string(m.patch_size);
  ckpt.config["embed_dim"] = std::to_string(m.embed_dim);
  ckpt.config["encoder_layers"] = std::to_string(m.encoder_layers);
  ckpt.config["attention_heads"] = std::to_string(m.attention_heads);
  ckpt.config["mlp_ratio"] = format_double(m.mlp_ratio);
  ckpt.config["decoder_hidden"] = std::to_string(m.decoder_hidden);
  ckpt.config["num_classes"] = std::to_string(m.num_classes);
  ckpt.config["masking_ratio"] = format_double(m.masking_ratio);
  ckpt.config["head_kind"] = head_kind_name(sys.model.head.kind);
  ckpt.config["use_codebook"] = sys.config.use_codebook ? "1" : "0";
  if (sys.config.use_codebook) {
    ckpt.config["codebook_size"] = std::to_string(sys.config.codebook_size);
    ckpt.config["codebook_beta"] = format_double(sys.config.codebook_beta);
  }
  ckpt.tensors = sys.named_parameters();
  save_checkpoint(ckpt, path);
}

SemanticSystem load_system(const std::string& path) {
  Checkpoint ckpt = load_checkpoint(path);
  const auto& cfg = ckpt.config;
  SystemConfig sc;
  sc.model.image_size = parse_size("image_size", require_key(cfg, "image_size"));
  sc.model.channels = parse_size("channels", require_key(cfg, "channels"));
  sc.model.patch_size = parse_size("patch_size", require_key(cfg, "patch_size"));
  sc.model.embed_dim = parse_size("embed_dim", require_key(cfg, "embed_dim"));
  sc.model.encoder_layers =
      parse_size("encoder_layers", require_key(cfg, "encoder_layers"));
  sc.model.attention_heads =
      parse_size("attention_heads", require_key(cfg, "attention_heads"));
  sc.model.mlp_ratio = parse_double("mlp_ratio", require_key(cfg, "mlp_ratio"));
  sc.model.decoder_hidden =
      parse_size("decoder_hidden", require_key(cfg, "decoder_hidden"));
  sc.model.num_classes =
      parse_size("num_classes", require_key(cfg, "num_classes"));
  sc.model.masking_ratio =
      parse_double("masking_ratio", require_key(cfg, "masking_ratio"));
  sc.use_codebook = require_key(cfg, "use_codebook") == "1";
  if (sc.use_codebook) {
    sc.codebook_size =
        parse_size("codebook_size", require_key(cfg, "codebook_size"));
    sc.codebook_beta =
        parse_double("codebook_beta", require_key(cfg, "codebook_beta"));
  }
  HeadKind head = head_kind_from_name(require_key(cfg, "head_kind"));

  RngStream scratch(0, StreamLabel::init);
  SemanticSystem sys = SemanticSystem::init(sc, head, scratch);

  std::map<std::string, Tensor> stored;
  for (auto& [name, t] : ckpt.tensors) {
    if (!stored.emplace(name, t).second)
      throw DataError("checkpoint '" + path + "': duplicate tensor '" + name +
                      "'");
  }
  auto expected = sys.named_parameters();
  if (stored.size() != expected.size())
    throw DataError("checkpoint '" + path + "': has " +
                    std::to_string(stored.size()) + " tensors, config implies " +
                    std::to_string(expected.size()));
  for (auto& [name, param] : expected) {
    auto it = stored.find(name);
    if (it == stored.end())
      throw DataError("checkpoint '" + path + "': missing tensor '" + name +
                      "'");
    if (it->second.shape() != param.shape())
      throw DataError("checkpoint '" + path + "': tensor '" + name +
                      "' has shape " + shape_to_string(it->second.shape()) +
                      ", expected " + shape_to_string(param.shape()));
    param.mutable_data() = it->second.data();
  }
  return sys;
}

}  // namespace semcom
