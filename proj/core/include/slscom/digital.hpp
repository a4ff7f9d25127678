#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "slscom/channel.hpp"
#include "slscom/config.hpp"

namespace slscom {

struct LengthError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- 8-bit mu-law companding (mu = 255) ----
// Values are clipped to [-A, A] (silently; callers can count saturations),
// normalized, compressed F(v) = sgn(v) ln(1+255|v|)/ln 256, then quantized to
// 256 uniform levels with round-half-away-from-zero.  0 -> 128, +-A -> 255/0.
std::uint8_t mulaw_encode(double x, double A, long* saturated = nullptr);
double mulaw_decode(std::uint8_t code, double A);

std::vector<std::uint8_t> mulaw_encode(const std::vector<double>& x, double A,
                                       long* saturated = nullptr);
std::vector<double> mulaw_decode(const std::vector<std::uint8_t>& codes, double A);

// Clipping bound: 4x the population standard deviation of the values.
double clipping_bound(const std::vector<double>& values);

// MSB-first byte/bit packing.
std::vector<std::uint8_t> bytes_to_bits(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> bits_to_bytes(const std::vector<std::uint8_t>& bits);

// ---- 8-QAM, Gray rectangular 4x2 over {+-1,+-3} x {+-1}, scaled 1/sqrt(6) ----
// Bit label (b0 b1 b2): b0 b1 Gray-code the real axis (00 -3, 01 -1, 11 +1,
// 10 +3); b2 selects the imaginary axis (0 -> -1, 1 -> +1).
struct QamMap {
  static constexpr int order = 8;
  static constexpr int bits_per_symbol = 3;
  std::array<cplx, 8> table;  // index = (b0<<2) | (b1<<1) | b2

  QamMap();
};

const QamMap& qam8_table();

// bit count must be a multiple of 3; throws LengthError otherwise.
cvec qam8_map(const std::vector<std::uint8_t>& bits);
// hard decision: nearest constellation point, ties to the lowest index.
std::vector<std::uint8_t> qam8_demap(const cvec& symbols);

// ---- pluggable channel code ----
class ChannelCodeInterface {
public:
  virtual ~ChannelCodeInterface() = default;
  virtual std::vector<std::uint8_t> encode(const std::vector<std::uint8_t>& bits) = 0;
  // hard-decision input; soft decoding stays behind implementations
  virtual std::vector<std::uint8_t> decode(const std::vector<std::uint8_t>& bits) = 0;
  virtual Rational rate() const = 0;
  virtual long block_info_bits() const = 0;  // 0 = unblocked (stream) code
};

// Rate-1 identity code.
class NullCode : public ChannelCodeInterface {
public:
  std::vector<std::uint8_t> encode(const std::vector<std::uint8_t>& bits) override;
  std::vector<std::uint8_t> decode(const std::vector<std::uint8_t>& bits) override;
  Rational rate() const override { return {1, 1}; }
  long block_info_bits() const override { return 0; }
};

// Reference (3,6)-regular rate-1/2 LDPC with a deterministic pseudo-random
// parity-check construction and min-sum decoding of hard-decision inputs.
class RegularLdpcCode : public ChannelCodeInterface {
public:
  explicit RegularLdpcCode(int block_bits = 96, int iterations = 30,
                           std::uint64_t construction_seed = 7);
  std::vector<std::uint8_t> encode(const std::vector<std::uint8_t>& bits) override;
  std::vector<std::uint8_t> decode(const std::vector<std::uint8_t>& bits) override;
  Rational rate() const override { return {1, 2}; }
  long block_info_bits() const override { return n_ - m_; }

private:
  int n_, m_, iters_;
  std::vector<std::vector<int>> check_vars_;   // per check row, variable indices
  std::vector<std::vector<int>> var_checks_;   // per variable, check indices
  std::vector<std::vector<std::uint8_t>> gen_; // systematic generator rows (parity part)
  std::vector<int> col_perm_;                  // systematic column permutation
};

// ---- hybrid semantic + digital pipeline ----
struct HybridStats {
  long qam_symbols = 0;   // per image, = ceil((8 L_s / rate) / 3)
  long frames = 0;
  long saturated = 0;     // clipped components during quantization
};

// Quantize -> channel code -> 8-QAM -> OFDM frames over the multipath channel
// with LS estimation and MMSE equalization -> demap -> decode -> dequantize.
// snr_db = +infinity runs the channel noiselessly; with a NullCode that
// reproduces the mu-law roundtrip exactly.
std::vector<double> hybrid_transmit(const std::vector<double>& x, double A,
                                    ChannelCodeInterface& code,
                                    const OfdmParams& ofdm,
                                    const ChannelParams& channel, double snr_db,
                                    const CGrid& pilots,
                                    std::mt19937_64& channel_rng,
                                    std::mt19937_64& noise_rng,
                                    HybridStats* stats = nullptr);

// QAM symbols per image for a semantic vector length and code rate.
long hybrid_symbol_count(long semantic_len, const Rational& rate);

}  // namespace slscom
