#include <doctest.h>

#include <cmath>
#include <random>

#include "slscom/digital.hpp"

using namespace slscom;

TEST_CASE("mu-law endpoints and the zero code") {
  const double A = 2.5;
  CHECK(mulaw_encode(0.0, A) == 128);  // (0+1)/2*255 = 127.5 rounds away from zero
  CHECK(mulaw_encode(A, A) == 255);
  CHECK(mulaw_encode(-A, A) == 0);
  CHECK(mulaw_decode(255, A) == doctest::Approx(A).epsilon(1e-12));
  CHECK(mulaw_decode(0, A) == doctest::Approx(-A).epsilon(1e-12));
  CHECK(std::abs(mulaw_decode(mulaw_encode(0.0, A), A)) <
        A * 2.2e-4);  // half of the innermost cell
}

TEST_CASE("mu-law roundtrip error obeys the local cell bound") {
  const double A = 1.0;
  const double ln256 = std::log(256.0);
  double worst_ratio = 0;
  for (int i = 0; i <= 20000; ++i) {
    double x = -A + 2.0 * A * i / 20000;
    double xr = mulaw_decode(mulaw_encode(x, A), A);
    // local cell half-width: df = 1/255 in compressed space,
    // dx/df = ln(256) * (1/255 + |x|)
    double half_cell = (1.0 / 255.0) * ln256 * (1.0 / 255.0 + std::abs(x));
    worst_ratio = std::max(worst_ratio, std::abs(x - xr) / half_cell);
  }
  // the expander slope grows exponentially inside a cell, so the first-order
  // bound is loose by at most (e^d - 1)/d with d = 2 ln(256)/255
  double d = 2 * ln256 / 255.0;
  CHECK(worst_ratio <= (std::exp(d) - 1.0) / d);
}

TEST_CASE("mu-law clipping is silent but counted") {
  long saturated = 0;
  std::vector<double> x{0.5, 3.0, -4.0, 0.0};
  auto codes = mulaw_encode(x, 1.0, &saturated);
  CHECK(saturated == 2);
  CHECK(codes[1] == 255);
  CHECK(codes[2] == 0);
}

TEST_CASE("qam table is unit energy and Gray labeled") {
  const QamMap& m = qam8_table();
  double energy = 0;
  for (const auto& z : m.table) energy += std::norm(z);
  CHECK(energy / 8 == doctest::Approx(1.0).epsilon(1e-12));

  // nearest-neighbor pairs differ in exactly one bit
  for (int i = 0; i < 8; ++i) {
    double dmin = 1e9;
    for (int j = 0; j < 8; ++j)
      if (j != i) dmin = std::min(dmin, std::abs(m.table[i] - m.table[j]));
    for (int j = 0; j < 8; ++j) {
      if (j == i || std::abs(m.table[i] - m.table[j]) > dmin + 1e-9) continue;
      int diff = __builtin_popcount(static_cast<unsigned>(i ^ j));
      CHECK(diff == 1);
    }
  }
}

TEST_CASE("qam map/demap roundtrip over all codewords") {
  std::vector<std::uint8_t> bits;
  for (int w = 0; w < 8; ++w) {
    bits.push_back((w >> 2) & 1);
    bits.push_back((w >> 1) & 1);
    bits.push_back(w & 1);
  }
  CHECK(qam8_demap(qam8_map(bits)) == bits);
  CHECK_THROWS_AS(qam8_map({0, 1}), LengthError);
}

TEST_CASE("qam hard decisions at 20 dB are effectively error free") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> bit(0, 1);
  std::normal_distribution<double> noise(0, std::sqrt(0.01 / 2));  // Es/N0 = 20 dB
  const long n_bits = 999999;
  std::vector<std::uint8_t> bits(n_bits);
  for (auto& b : bits) b = static_cast<std::uint8_t>(bit(rng));
  cvec sym = qam8_map(bits);
  for (auto& z : sym) z += cplx(noise(rng), noise(rng));
  auto rx = qam8_demap(sym);
  long errors = 0;
  for (long i = 0; i < n_bits; ++i) errors += rx[i] != bits[i];
  CHECK(static_cast<double>(errors) / n_bits < 1e-4);
}

TEST_CASE("channel codes invert themselves on a clean channel") {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> bit(0, 1);

  NullCode null;
  std::vector<std::uint8_t> bits(100);
  for (auto& b : bits) b = static_cast<std::uint8_t>(bit(rng));
  CHECK(null.decode(null.encode(bits)) == bits);
  CHECK(null.rate().value() == doctest::Approx(1.0));

  RegularLdpcCode ldpc;
  CHECK(ldpc.rate().value() == doctest::Approx(0.5));
  std::vector<std::uint8_t> info(ldpc.block_info_bits() * 2);
  for (auto& b : info) b = static_cast<std::uint8_t>(bit(rng));
  auto coded = ldpc.encode(info);
  CHECK(static_cast<long>(coded.size()) == 4 * ldpc.block_info_bits());
  CHECK(ldpc.decode(coded) == info);
}

TEST_CASE("ldpc min-sum corrects sparse bit flips") {
  std::mt19937_64 rng(29);
  std::uniform_int_distribution<int> bit(0, 1);
  RegularLdpcCode ldpc;
  std::vector<std::uint8_t> info(ldpc.block_info_bits());
  for (auto& b : info) b = static_cast<std::uint8_t>(bit(rng));
  auto coded = ldpc.encode(info);
  int corrected = 0, trials = 30;
  std::uniform_int_distribution<int> pos(0, static_cast<int>(coded.size()) - 1);
  for (int t = 0; t < trials; ++t) {
    auto noisy = coded;
    int a = pos(rng), b = pos(rng);
    noisy[a] ^= 1;
    noisy[b] ^= 1;
    if (ldpc.decode(noisy) == info) ++corrected;
  }
  CHECK(corrected >= trials * 2 / 3);  // two random flips usually recoverable
}

TEST_CASE("hybrid pipeline identity with null code and no noise") {
  std::mt19937_64 rng(31), ch_rng(32), n_rng(33);
  std::normal_distribution<double> g(0, 1);
  std::vector<double> x(128);
  for (auto& v : x) v = g(rng);
  double A = clipping_bound(x);
  OfdmParams ofdm;
  ChannelParams chp;
  CGrid pilots = make_pilot_grid(ofdm, ch_rng);
  NullCode null;
  HybridStats stats;
  auto xq = hybrid_transmit(x, A, null, ofdm, chp,
                            std::numeric_limits<double>::infinity(), pilots, ch_rng,
                            n_rng, &stats);
  REQUIRE(xq.size() == x.size());
  for (size_t i = 0; i < x.size(); ++i)
    CHECK(xq[i] == mulaw_decode(mulaw_encode(x[i], A), A));
  CHECK(stats.qam_symbols == hybrid_symbol_count(128, Rational{1, 1}));
  CHECK(stats.qam_symbols == (8 * 128 + 2) / 3);
}

TEST_CASE("hybrid transmission at high snr is near lossless") {
  std::mt19937_64 rng(41), ch_rng(42), n_rng(43);
  std::normal_distribution<double> g(0, 1);
  std::vector<double> x(128);
  for (auto& v : x) v = g(rng);
  double A = clipping_bound(x);
  OfdmParams ofdm;
  ChannelParams chp;
  CGrid pilots = make_pilot_grid(ofdm, ch_rng);
  RegularLdpcCode ldpc;
  auto xq = hybrid_transmit(x, A, ldpc, ofdm, chp, 30.0, pilots, ch_rng, n_rng);
  double max_err = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    double clean = mulaw_decode(mulaw_encode(x[i], A), A);
    max_err = std::max(max_err, std::abs(xq[i] - clean));
  }
  CHECK(max_err < 0.3);  // residual bit errors stay rare and local
}

TEST_CASE("symbol accounting per image") {
  // rate 1: ceil(8*L_s/3); rate 2/3 on the large-preset semantic vector
  CHECK(hybrid_symbol_count(2048, Rational{1, 1}) == (8 * 2048 + 2) / 3);
  CHECK(hybrid_symbol_count(2048, Rational{2, 3}) == 8192);
  CHECK(hybrid_symbol_count(512, Rational{2, 3}) == 2048);
}
