#include "semcom/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "semcom/errors.hpp"
#include "semcom/rng.hpp"

namespace semcom {

void SyntheticSpec::validate() const {
  if (classes < 2 || classes > 4)
    throw ConfigError(
        "synthetic: classes must lie in [2, 4] (prototypes come from the "
        "smoothest cosine modes); use the cifar10 dataset for more");
  if (image_size < 4 || image_size % 4 != 0)
    throw ConfigError(
        "synthetic: image_size must be a positive multiple of 4 (the mode "
        "grid scales with it)");
  if (channels == 0) throw ConfigError("synthetic: channels must be positive");
  if (train_per_class == 0 || test_per_class == 0)
    throw ConfigError("synthetic: per-class counts must be positive");
  if (amplitude_min < 0.0 || amplitude_max < amplitude_min)
    throw ConfigError("synthetic: amplitude band must satisfy 0 <= min <= max");
  if (texture_weight < 0.0 || texture_weight >= 1.0)
    throw ConfigError("synthetic: texture_weight must lie in [0, 1)");
  if (texture_modes == 0 || texture_modes > 12)
    throw ConfigError(
        "synthetic: texture_modes must lie in [1, 12], the number of cosine "
        "modes left over after the three prototype modes");
  if (texture_bias < 0.0 || texture_bias > 1.0)
    throw ConfigError("synthetic: texture_bias must lie in [0, 1]");
  if (texture_bias > 0.0 && texture_modes > 12 / classes)
    throw ConfigError(
        "synthetic: with texture_bias > 0, texture_modes must fit one "
        "class's share of the 12 texture modes (12 / classes)");
  if (pixel_noise < 0.0) throw ConfigError("synthetic: pixel_noise must be >= 0");
}

namespace {

// The 15 nonzero (fx, fy) modes of a 4x4 frequency grid scaled by
// image_size/4. On the half-sample cosine grid all modes are exactly
// orthogonal. Three of them -- the even pairs (2,0), (0,2), (2,2) -- complete
// a whole number of periods inside every (image_size/4)-sized patch, so each
// patch carries an identical copy of any pattern built from them: class
// prototypes live in that three-mode subspace (see class_template) and a
// feature average over a random patch subset keeps the full class signal no
// matter which subset was kept. The remaining twelve modes flip sign from
// patch to patch; the per-sample texture fields draw from those, so the
// texture never projects onto a class prototype.
struct ModeSplit {
  std::vector<std::pair<std::size_t, std::size_t>> prototype;  // 3 even modes
  std::vector<std::pair<std::size_t, std::size_t>> texture;    // 12 others
};

ModeSplit mode_grid(std::size_t n) {
  std::size_t k = n / 4;
  ModeSplit split;
  for (std::size_t fy = 0; fy < 4; ++fy)
    for (std::size_t fx = 0; fx < 4; ++fx) {
      if (fx + fy == 0) continue;
      bool even = fx % 2 == 0 && fy % 2 == 0;
      (even ? split.prototype : split.texture).emplace_back(fx * k, fy * k);
    }
  return split;
}

// Corners of a regular tetrahedron on the unit sphere in the prototype
// subspace: four unit vectors with pairwise inner product -1/3, so every
// pair of classes is the same distance apart and no class is privileged.
constexpr double kTetrahedron[4][3] = {
    {1.0, 1.0, 1.0}, {1.0, -1.0, -1.0}, {-1.0, 1.0, -1.0}, {-1.0, -1.0, 1.0}};

// Unnormalized separable cosine mode, replicated across channels.
std::vector<double> cosine_mode(std::size_t n, std::size_t channels,
                                std::size_t fx, std::size_t fy) {
  std::vector<double> t(n * n * channels);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      double v = std::cos(std::numbers::pi * static_cast<double>(fx) *
                          (static_cast<double>(x) + 0.5) /
                          static_cast<double>(n)) *
                 std::cos(std::numbers::pi * static_cast<double>(fy) *
                          (static_cast<double>(y) + 0.5) /
                          static_cast<double>(n));
      for (std::size_t c = 0; c < channels; ++c)
        t[(y * n + x) * channels + c] = v;
    }
  }
  return t;
}

void normalize_l2(std::vector<double>& t) {
  double norm_sq = 0.0;
  for (double v : t) norm_sq += v * v;
  if (norm_sq == 0.0) return;
  double inv = 1.0 / std::sqrt(norm_sq);
  for (double& v : t) v *= inv;
}

}  // namespace

std::vector<double> class_template(const SyntheticSpec& spec,
                                   std::size_t label) {
  if (label >= spec.classes)
    throw ConfigError("synthetic: label " + std::to_string(label) +
                      " out of range for " + std::to_string(spec.classes) +
                      " classes");
  ModeSplit split = mode_grid(spec.image_size);
  std::size_t n = spec.image_size;
  std::vector<double> t(n * n * spec.channels, 0.0);
  for (std::size_t m = 0; m < split.prototype.size(); ++m) {
    std::vector<double> mode = cosine_mode(n, spec.channels,
                                           split.prototype[m].first,
                                           split.prototype[m].second);
    normalize_l2(mode);
    double coeff = kTetrahedron[label][m] / std::sqrt(3.0);
    for (std::size_t p = 0; p < t.size(); ++p) t[p] += coeff * mode[p];
  }
  return t;  // unit L2 already: orthonormal modes, unit coefficient vector
}

namespace {

// Unit-norm random mixture of texture_modes distinct modes. The twelve
// texture modes are split into `classes` equal contiguous pools; a biased
// coin decides whether this sample draws from its own class's pool or from
// the full set. Draw order per field: the coin, then one index per kept
// mode (rejecting repeats), then one normal coefficient per mode.
std::vector<double> texture_field(
    const SyntheticSpec& spec,
    const std::vector<std::pair<std::size_t, std::size_t>>& pool,
    std::size_t label, RngStream& rng) {
  std::size_t share = pool.size() / spec.classes;
  bool own_pool = rng.uniform(0.0, 1.0) < spec.texture_bias;
  std::size_t lo = own_pool ? label * share : 0;
  std::size_t extent = own_pool ? share : pool.size();
  std::vector<std::size_t> chosen;
  while (chosen.size() < spec.texture_modes) {
    std::size_t pick = lo + rng.uniform_index(extent);
    if (std::find(chosen.begin(), chosen.end(), pick) == chosen.end())
      chosen.push_back(pick);
  }
  std::size_t n = spec.image_size;
  std::vector<double> field(n * n * spec.channels, 0.0);
  for (std::size_t m : chosen) {
    double coeff = rng.normal();
    std::vector<double> mode =
        cosine_mode(n, spec.channels, pool[m].first, pool[m].second);
    normalize_l2(mode);
    for (std::size_t p = 0; p < field.size(); ++p)
      field[p] += coeff * mode[p];
  }
  normalize_l2(field);
  return field;
}

std::vector<LabeledImage> synthesize_split(const SyntheticSpec& spec,
                                           std::size_t per_class,
                                           RngStream& rng) {
  std::size_t n = spec.image_size;
  std::vector<std::vector<double>> templates(spec.classes);
  for (std::size_t c = 0; c < spec.classes; ++c)
    templates[c] = class_template(spec, c);
  std::vector<std::pair<std::size_t, std::size_t>> texture_pool =
      mode_grid(spec.image_size).texture;
  double proto_w = std::sqrt(1.0 - spec.texture_weight * spec.texture_weight);
  std::vector<LabeledImage> out;
  out.reserve(per_class * spec.classes);
  for (std::size_t i = 0; i < per_class; ++i) {
    for (std::size_t c = 0; c < spec.classes; ++c) {
      double a = rng.uniform(spec.amplitude_min, spec.amplitude_max);
      std::vector<double> field(n * n * spec.channels, 0.0);
      if (spec.texture_weight > 0.0) {
        field = texture_field(spec, texture_pool, c, rng);
        for (double& v : field) v *= spec.texture_weight;
      }
      for (std::size_t p = 0; p < field.size(); ++p)
        field[p] += proto_w * templates[c][p];
      std::vector<double> pixels(n * n * spec.channels);
      for (std::size_t p = 0; p < pixels.size(); ++p) {
        double v = 0.5 + a * field[p] + spec.pixel_noise * rng.normal();
        pixels[p] = std::clamp(v, 0.0, 1.0);
      }
      out.push_back({Tensor::from_data({n, n, spec.channels},
                                       std::move(pixels)),
                     c});
    }
  }
  return out;
}

}  // namespace

Dataset make_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  Dataset ds;
  ds.num_classes = spec.classes;
  ds.image_size = spec.image_size;
  ds.channels = spec.channels;
  RngStream base(seed, StreamLabel::data);
  RngStream train_rng = base.fork(1);
  RngStream test_rng = base.fork(2);
  ds.train = synthesize_split(spec, spec.train_per_class, train_rng);
  ds.test = synthesize_split(spec, spec.test_per_class, test_rng);
  return ds;
}

namespace {

constexpr std::size_t kCifarRecord = 3073;  // label + 32*32*3 planar pixels
constexpr std::size_t kCifarSide = 32;

}  // namespace

std::vector<LabeledImage> load_cifar10_batch(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cifar10: cannot open '" + path + "'");
  std::vector<unsigned char> raw((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (raw.empty() || raw.size() % kCifarRecord != 0)
    throw DataError("cifar10 '" + path + "': size " +
                    std::to_string(raw.size()) +
                    " is not a multiple of the 3073-byte record; truncation at "
                    "byte " +
                    std::to_string(raw.size() - raw.size() % kCifarRecord));
  std::vector<LabeledImage> out;
  out.reserve(raw.size() / kCifarRecord);
  for (std::size_t rec = 0; rec < raw.size(); rec += kCifarRecord) {
    unsigned char label = raw[rec];
    if (label > 9)
      throw DataError("cifar10 '" + path + "': label byte " +
                      std::to_string(static_cast<int>(label)) +
                      " out of range at byte " + std::to_string(rec));
    std::vector<double> pixels(kCifarSide * kCifarSide * 3);
    for (std::size_t y = 0; y < kCifarSide; ++y)
      for (std::size_t x = 0; x < kCifarSide; ++x)
        for (std::size_t c = 0; c < 3; ++c) {
          std::size_t planar = rec + 1 + c * 1024 + y * kCifarSide + x;
          pixels[(y * kCifarSide + x) * 3 + c] =
              static_cast<double>(raw[planar]) / 255.0;
        }
    out.push_back({Tensor::from_data({kCifarSide, kCifarSide, 3},
                                     std::move(pixels)),
                   static_cast<std::size_t>(label)});
  }
  return out;
}

Dataset load_cifar10(const std::string& dir, std::size_t train_limit,
                     std::size_t test_limit, std::uint64_t seed) {
  Dataset ds;
  ds.num_classes = 10;
  ds.image_size = kCifarSide;
  ds.channels = 3;
  for (int batch = 1; batch <= 5; ++batch) {
    auto part = load_cifar10_batch(dir + "/data_batch_" +
                                   std::to_string(batch) + ".bin");
    ds.train.insert(ds.train.end(), part.begin(), part.end());
  }
  ds.test = load_cifar10_batch(dir + "/test_batch.bin");

  RngStream rng(seed, StreamLabel::data);
  auto subsample = [&rng](std::vector<LabeledImage>& items,
                          std::size_t limit) {
    if (limit == 0 || limit >= items.size()) return;
    std::vector<std::size_t> order(items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    order.resize(limit);
    std::sort(order.begin(), order.end());
    std::vector<LabeledImage> kept;
    kept.reserve(limit);
    for (std::size_t i : order) kept.push_back(std::move(items[i]));
    items = std::move(kept);
  };
  subsample(ds.train, train_limit);
  subsample(ds.test, test_limit);
  return ds;
}

}  // namespace semcom
