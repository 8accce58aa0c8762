#include "semcom/channel.hpp"

#include <algorithm>

#include "semcom/errors.hpp"

namespace semcom {

std::string channel_family_name(ChannelFamily family) {
  switch (family) {
    case ChannelFamily::awgn: return "awgn";
    case ChannelFamily::rayleigh: return "rayleigh";
    case ChannelFamily::rician: return "rician";
  }
  throw ContractError("channel: unknown family value");
}

ChannelFamily channel_family_from_name(const std::string& name) {
  if (name == "awgn") return ChannelFamily::awgn;
  if (name == "rayleigh") return ChannelFamily::rayleigh;
  if (name == "rician") return ChannelFamily::rician;
  throw ConfigError("channel: unknown family '" + name + "'");
}

void ChannelConfig::validate() const {
  if (!std::isfinite(snr_db)) throw ConfigError("channel: snr_db must be finite");
  if (family == ChannelFamily::rician && rician_k < 0.0)
    throw ConfigError("channel: rician_k must be >= 0");
}

std::vector<std::uint8_t> serialize_indices(const IndexFrame& frame) {
  if (frame.bits_per_index == 0 || frame.bits_per_index > 32)
    throw ConfigError("serialize_indices: bits_per_index out of range");
  std::vector<std::uint8_t> bits;
  bits.reserve(frame.bit_length());
  std::size_t limit = std::size_t{1} << frame.bits_per_index;
  for (std::size_t idx : frame.indices) {
    if (idx >= limit)
      throw ContractError("serialize_indices: index " + std::to_string(idx) +
                          " needs more than " +
                          std::to_string(frame.bits_per_index) + " bits");
    for (std::size_t b = frame.bits_per_index; b-- > 0;)
      bits.push_back(static_cast<std::uint8_t>((idx >> b) & 1u));
  }
  return bits;
}

IndexFrame deserialize_indices(const std::vector<std::uint8_t>& bits,
                               std::size_t bits_per_index) {
  if (bits_per_index == 0 || bits_per_index > 32)
    throw ConfigError("deserialize_indices: bits_per_index out of range");
  if (bits.size() % bits_per_index != 0)
    throw ContractError("deserialize_indices: " + std::to_string(bits.size()) +
                        " bits is not a multiple of " +
                        std::to_string(bits_per_index));
  IndexFrame frame;
  frame.bits_per_index = bits_per_index;
  frame.indices.reserve(bits.size() / bits_per_index);
  for (std::size_t i = 0; i < bits.size(); i += bits_per_index) {
    std::size_t idx = 0;
    for (std::size_t b = 0; b < bits_per_index; ++b)
      idx = (idx << 1) | (bits[i + b] & 1u);
    frame.indices.push_back(idx);
  }
  return frame;
}

namespace {

constexpr double kQamScale = 0.31622776601683794;  // 1/sqrt(10)

// Gray map per axis: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3.
double gray_level(std::uint8_t hi, std::uint8_t lo) {
  if (hi == 0) return lo == 0 ? -3.0 : -1.0;
  return lo == 0 ? 3.0 : 1.0;
}

// Minimum-distance decision back to the two bits of one axis.
void gray_bits(double level, std::uint8_t* hi, std::uint8_t* lo) {
  if (level < -2.0) {
    *hi = 0; *lo = 0;
  } else if (level < 0.0) {
    *hi = 0; *lo = 1;
  } else if (level < 2.0) {
    *hi = 1; *lo = 1;
  } else {
    *hi = 1; *lo = 0;
  }
}

}  // namespace

std::vector<std::complex<double>> qam16_modulate(
    const std::vector<std::uint8_t>& bits) {
  if (bits.size() % 4 != 0)
    throw DataError("qam16_modulate: bit count " + std::to_string(bits.size()) +
                    " is not a multiple of 4");
  std::vector<std::complex<double>> symbols;
  symbols.reserve(bits.size() / 4);
  for (std::size_t i = 0; i < bits.size(); i += 4) {
    double re = gray_level(bits[i], bits[i + 1]) * kQamScale;
    double im = gray_level(bits[i + 2], bits[i + 3]) * kQamScale;
    symbols.emplace_back(re, im);
  }
  return symbols;
}

std::vector<std::uint8_t> qam16_demodulate(
    const std::vector<std::complex<double>>& symbols) {
  std::vector<std::uint8_t> bits(symbols.size() * 4);
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    gray_bits(symbols[i].real() / kQamScale, &bits[4 * i], &bits[4 * i + 1]);
    gray_bits(symbols[i].imag() / kQamScale, &bits[4 * i + 2],
              &bits[4 * i + 3]);
  }
  return bits;
}

std::vector<std::pair<std::array<std::uint8_t, 4>, std::complex<double>>>
qam16_constellation() {
  std::vector<std::pair<std::array<std::uint8_t, 4>, std::complex<double>>>
      table;
  table.reserve(16);
  for (std::uint8_t n = 0; n < 16; ++n) {
    std::array<std::uint8_t, 4> b{
        static_cast<std::uint8_t>((n >> 3) & 1),
        static_cast<std::uint8_t>((n >> 2) & 1),
        static_cast<std::uint8_t>((n >> 1) & 1),
        static_cast<std::uint8_t>(n & 1)};
    std::vector<std::uint8_t> bits(b.begin(), b.end());
    table.emplace_back(b, qam16_modulate(bits)[0]);
  }
  return table;
}

ChannelOutput apply_channel(const std::vector<std::complex<double>>& symbols,
                            const ChannelConfig& cfg, RngStream& rng) {
  cfg.validate();
  double sigma = std::sqrt(cfg.sigma2());
  double noise_axis = sigma / std::sqrt(2.0);
  ChannelOutput out;
  out.received.reserve(symbols.size());
  out.fading.reserve(symbols.size());
  for (const auto& x : symbols) {
    std::complex<double> h(1.0, 0.0);
    switch (cfg.family) {
      case ChannelFamily::awgn:
        break;
      case ChannelFamily::rayleigh:
        h = std::complex<double>(rng.normal(), rng.normal()) / std::sqrt(2.0);
        break;
      case ChannelFamily::rician: {
        double los = std::sqrt(cfg.rician_k / (cfg.rician_k + 1.0));
        double diffuse = std::sqrt(1.0 / (2.0 * (cfg.rician_k + 1.0)));
        h = std::complex<double>(los + diffuse * rng.normal(),
                                 diffuse * rng.normal());
        break;
      }
    }
    std::complex<double> n(noise_axis * rng.normal(),
                           noise_axis * rng.normal());
    out.fading.push_back(h);
    out.received.push_back(h * x + n);
  }
  return out;
}

std::vector<std::uint8_t> equalize_demodulate(
    const std::vector<std::complex<double>>& received,
    const std::vector<std::complex<double>>& fading, RngStream& rng) {
  if (received.size() != fading.size())
    throw ContractError("equalize_demodulate: " +
                        std::to_string(received.size()) + " symbols but " +
                        std::to_string(fading.size()) + " fading coefficients");
  std::vector<std::uint8_t> bits;
  bits.reserve(received.size() * 4);
  for (std::size_t i = 0; i < received.size(); ++i) {
    if (std::abs(fading[i]) == 0.0) {
      for (int b = 0; b < 4; ++b)
        bits.push_back(static_cast<std::uint8_t>(rng.next_u64() & 1u));
      continue;
    }
    std::complex<double> y = received[i] / fading[i];
    std::uint8_t hilo[4];
    gray_bits(y.real() / kQamScale, &hilo[0], &hilo[1]);
    gray_bits(y.imag() / kQamScale, &hilo[2], &hilo[3]);
    bits.insert(bits.end(), hilo, hilo + 4);
  }
  return bits;
}

IndexFrame transmit_indices(const IndexFrame& frame, const ChannelConfig& cfg,
                            RngStream& rng) {
  std::vector<std::uint8_t> bits = serialize_indices(frame);
  std::size_t payload = bits.size();
  while (bits.size() % 4 != 0) bits.push_back(0);
  auto symbols = qam16_modulate(bits);
  ChannelOutput link = apply_channel(symbols, cfg, rng);
  auto received_bits = equalize_demodulate(link.received, link.fading, rng);
  received_bits.resize(payload);
  return deserialize_indices(received_bits, frame.bits_per_index);
}

std::size_t count_overhead_indices(std::size_t patches, double mask_ratio,
                                   std::size_t bits_per_index) {
  // Same rounding as the mask planner, so the count matches what a real
  // transmission of the kept patches would use.
  std::size_t masked = static_cast<std::size_t>(
      std::llround(static_cast<double>(patches) * mask_ratio));
  std::size_t unmasked = patches - masked;
  double symbols =
      static_cast<double>(unmasked * bits_per_index) / 4.0;
  return static_cast<std::size_t>(std::llround(symbols));
}

std::size_t count_overhead_reference(std::size_t payload_bytes,
                                     double code_rate) {
  if (code_rate <= 0.0) throw ConfigError("overhead: code rate must be > 0");
  double bits = static_cast<double>(payload_bytes) * 8.0 / code_rate;
  return static_cast<std::size_t>(std::llround(bits / 4.0));
}

std::string overhead_percent_string(std::size_t numerator,
                                    std::size_t denominator) {
  if (denominator == 0) throw ContractError("overhead: zero denominator");
  double percent =
      100.0 * static_cast<double>(numerator) / static_cast<double>(denominator);
  auto hundredths = static_cast<long long>(percent * 100.0);  // truncate
  std::string whole = std::to_string(hundredths / 100);
  std::string frac = std::to_string(hundredths % 100);
  if (frac.size() < 2) frac = "0" + frac;
  return whole + "." + frac;
}

}  // namespace semcom
