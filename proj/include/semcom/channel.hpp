#ifndef SEMCOM_CHANNEL_HPP
#define SEMCOM_CHANNEL_HPP

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "semcom/rng.hpp"

namespace semcom {

enum class ChannelFamily { awgn, rayleigh, rician };

std::string channel_family_name(ChannelFamily family);
ChannelFamily channel_family_from_name(const std::string& name);

// Scalar flat-fading link settings. The constellation has unit mean symbol
// energy, so snr_db is Es/N0 and sigma2() is the complex noise variance.
struct ChannelConfig {
  ChannelFamily family = ChannelFamily::awgn;
  double snr_db = 12.0;
  double rician_k = 4.0;  // line-of-sight power ratio, Rician only

  void validate() const;  // throws ConfigError
  double sigma2() const { return std::pow(10.0, -snr_db / 10.0); }
  bool operator==(const ChannelConfig&) const = default;
};

// A frame of codebook indices awaiting transmission.
struct IndexFrame {
  std::vector<std::size_t> indices;
  std::size_t bits_per_index = 8;

  std::size_t bit_length() const { return indices.size() * bits_per_index; }
};

// Big-endian bit packing of each index, concatenated in order.
std::vector<std::uint8_t> serialize_indices(const IndexFrame& frame);
IndexFrame deserialize_indices(const std::vector<std::uint8_t>& bits,
                               std::size_t bits_per_index);

// Gray-mapped 16-QAM, two bits per axis: 00 -> -3, 01 -> -1, 11 -> +1,
// 10 -> +3, scaled by 1/sqrt(10) for unit mean energy. First bit pair of
// each nibble drives the I axis, the second the Q axis.
std::vector<std::complex<double>> qam16_modulate(
    const std::vector<std::uint8_t>& bits);
std::vector<std::uint8_t> qam16_demodulate(
    const std::vector<std::complex<double>>& symbols);

// The sixteen (b0 b1 b2 b3, point) pairs of the mapping, for fixtures and
// documentation.
std::vector<std::pair<std::array<std::uint8_t, 4>, std::complex<double>>>
qam16_constellation();

// Per-symbol y = h*x + n. Returns received symbols and the fading
// coefficients h for perfect-CSI equalization. AWGN: h = 1. Rayleigh:
// h ~ CN(0,1). Rician factor K: h = sqrt(K/(K+1)) + CN(0, 1/(K+1)).
struct ChannelOutput {
  std::vector<std::complex<double>> received;
  std::vector<std::complex<double>> fading;
};
ChannelOutput apply_channel(const std::vector<std::complex<double>>& symbols,
                            const ChannelConfig& cfg, RngStream& rng);

// Zero-forcing equalization y/h followed by minimum-distance demodulation.
// |h| = 0 is an erasure: the four bits are drawn from `rng`.
std::vector<std::uint8_t> equalize_demodulate(
    const std::vector<std::complex<double>>& received,
    const std::vector<std::complex<double>>& fading, RngStream& rng);

// Full link: serialize -> modulate -> channel -> equalize -> deserialize.
// Pads the bitstream to a whole number of symbols with zero bits.
IndexFrame transmit_indices(const IndexFrame& frame, const ChannelConfig& cfg,
                            RngStream& rng);

// Symbols per image, per transmission scheme (16-QAM: 4 bits/symbol).
std::size_t count_overhead_indices(std::size_t patches, double mask_ratio,
                                   std::size_t bits_per_index);
std::size_t count_overhead_reference(std::size_t payload_bytes,
                                     double code_rate);
// Percentage a/b with two decimals, truncated toward zero rather than
// rounded: 196/20432 = 0.9593% renders as "0.95".
std::string overhead_percent_string(std::size_t numerator,
                                    std::size_t denominator);

}  // namespace semcom

#endif  // SEMCOM_CHANNEL_HPP
