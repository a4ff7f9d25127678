#include <doctest.h>

#include <cmath>
#include <random>

#include "slscom/channel.hpp"

#include "test_util.hpp"

using namespace slscom;

namespace {

CGrid random_grid(int K, int symbols, std::mt19937_64& rng) {
  CGrid g(K, symbols);
  std::normal_distribution<double> n(0, 1);
  for (auto& z : g.v) z = cplx(n(rng), n(rng)) / std::sqrt(2.0);
  return g;
}

}  // namespace

TEST_CASE("tap power profile is normalized with the frozen leading tap") {
  auto p = tap_power_profile(8, 0.25);
  REQUIRE(p.size() == 8);
  double sum = 0;
  for (double v : p) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p[0] == doctest::Approx(0.2558207969403307).epsilon(1e-12));
  CHECK(p[1] / p[0] == doctest::Approx(std::exp(-0.25)).epsilon(1e-12));
}

TEST_CASE("unitary fft basics") {
  const int K = 64;
  cvec delta(K, {0, 0});
  delta[0] = 1;
  cvec x = delta;
  fft_unitary(x, false);
  for (int k = 0; k < K; ++k) {
    CHECK(x[k].real() == doctest::Approx(1.0 / 8).epsilon(1e-12));
    CHECK(std::abs(x[k].imag()) < 1e-12);
  }

  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0, 1);
  cvec y(K);
  for (auto& z : y) z = cplx(n(rng), n(rng));
  double e_in = 0;
  for (auto& z : y) e_in += std::norm(z);
  cvec f = y;
  fft_unitary(f, false);
  double e_out = 0;
  for (auto& z : f) e_out += std::norm(z);
  CHECK(e_out == doctest::Approx(e_in).epsilon(1e-10));  // Parseval, unitary scaling
  fft_unitary(f, true);
  for (int k = 0; k < K; ++k) CHECK(std::abs(f[k] - y[k]) < 1e-10);

  cvec odd(3);
  CHECK_THROWS_AS(fft_unitary(odd, false), ChannelError);
}

TEST_CASE("frequency response matches the dft of the taps") {
  std::mt19937_64 rng(5);
  ChannelParams cp;
  ChannelRealization ch = sample_channel(cp, 64, rng);
  REQUIRE(ch.taps.size() == 8);
  REQUIRE(ch.freq.size() == 64);
  for (int k = 0; k < 64; ++k) {
    cplx h{0, 0};
    for (int l = 0; l < 8; ++l)
      h += ch.taps[l] * std::exp(cplx(0, -2.0 * M_PI * k * l / 64.0));
    CHECK(std::abs(ch.freq[k] - h) < 1e-9);
  }
}

TEST_CASE("channel realizations average to the tap profile") {
  std::mt19937_64 rng(7);
  ChannelParams cp;
  std::vector<double> acc(8, 0);
  const int N = 20000;
  for (int i = 0; i < N; ++i) {
    ChannelRealization ch = sample_channel(cp, 64, rng);
    for (int l = 0; l < 8; ++l) acc[l] += std::norm(ch.taps[l]) / N;
  }
  auto p = tap_power_profile(8, 0.25);
  for (int l = 0; l < 8; ++l) CHECK(acc[l] == doctest::Approx(p[l]).epsilon(0.05));
}

TEST_CASE("time-domain roundtrip equals the per-subcarrier product") {
  OfdmParams ofdm;  // K=64, Ns=6, Np=2, Lcp=16
  std::mt19937_64 rng(11), noise(12);
  CGrid pilots = make_pilot_grid(ofdm, rng);
  for (int rep = 0; rep < 5; ++rep) {
    CGrid data = random_grid(ofdm.subcarriers, ofdm.data_symbols, rng);
    ChannelRealization ch = sample_channel(ChannelParams{}, ofdm.subcarriers, rng);
    cvec tx = ofdm_modulate(data, pilots, ofdm);
    REQUIRE(static_cast<int>(tx.size()) ==
            (ofdm.subcarriers + ofdm.cp_length) *
                (ofdm.pilot_symbols + ofdm.data_symbols));
    cvec rx = transmit_time(tx, ch.taps, 0.0, noise);
    CGrid data_hat, pilots_hat;
    ofdm_demodulate(rx, ofdm, data_hat, pilots_hat);
    for (int i = 0; i < ofdm.data_symbols; ++i)
      for (int k = 0; k < ofdm.subcarriers; ++k) {
        cplx want = ch.freq[k] * data.at(k, i);
        CHECK(std::abs(data_hat.at(k, i) - want) <=
              1e-6 * std::max(1.0, std::abs(want)));
      }
  }
}

TEST_CASE("frequency-domain transmit applies H and calibrated noise") {
  OfdmParams ofdm;
  std::mt19937_64 rng(21), noise(22);
  CGrid pilots = make_pilot_grid(ofdm, rng);
  CGrid data = random_grid(ofdm.subcarriers, ofdm.data_symbols, rng);
  ChannelRealization ch = sample_channel(ChannelParams{}, ofdm.subcarriers, rng);

  CGrid dh, ph;
  transmit_freq(data, pilots, ch.freq, 0.0, noise, dh, ph);
  for (int i = 0; i < ofdm.data_symbols; ++i)
    for (int k = 0; k < ofdm.subcarriers; ++k)
      CHECK(std::abs(dh.at(k, i) - ch.freq[k] * data.at(k, i)) < 1e-12);

  // sigma^2 definition: average received signal power over K*Ns, divided by snr
  double num = 0;
  for (int i = 0; i < ofdm.data_symbols; ++i)
    for (int k = 0; k < ofdm.subcarriers; ++k)
      num += std::norm(ch.freq[k] * data.at(k, i));
  double want = num / (ofdm.subcarriers * ofdm.data_symbols * std::pow(10.0, 0.4));
  CHECK(calibrate_noise(ch.freq, data, 4.0) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("ls estimate is exact without noise and mmse then inverts the channel") {
  OfdmParams ofdm;
  std::mt19937_64 rng(31), noise(32);
  CGrid pilots = make_pilot_grid(ofdm, rng);
  CGrid data = random_grid(ofdm.subcarriers, ofdm.data_symbols, rng);
  ChannelRealization ch = sample_channel(ChannelParams{}, ofdm.subcarriers, rng);
  CGrid dh, ph;
  transmit_freq(data, pilots, ch.freq, 0.0, noise, dh, ph);
  cvec hhat = ls_estimate(ph, pilots);
  for (int k = 0; k < ofdm.subcarriers; ++k)
    CHECK(std::abs(hhat[k] - ch.freq[k]) < 1e-10);
  CGrid eq = mmse_equalize(dh, hhat, 0.0);
  for (int i = 0; i < ofdm.data_symbols; ++i)
    for (int k = 0; k < ofdm.subcarriers; ++k)
      CHECK(std::abs(eq.at(k, i) - data.at(k, i)) < 1e-9);
}

TEST_CASE("pilot grid symbols are unit magnitude and deterministic per stream") {
  OfdmParams ofdm;
  std::mt19937_64 a(3), b(3);
  CGrid p1 = make_pilot_grid(ofdm, a);
  CGrid p2 = make_pilot_grid(ofdm, b);
  REQUIRE(p1.v.size() == p2.v.size());
  for (size_t i = 0; i < p1.v.size(); ++i) {
    CHECK(std::abs(std::abs(p1.v[i]) - 1.0) < 1e-12);
    CHECK(p1.v[i] == p2.v[i]);
  }
}

TEST_CASE("power normalization and zero-vector rejection") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0, 3);
  cvec z(96);
  for (auto& v : z) v = cplx(n(rng), n(rng));
  cvec zn = normalize_power(z);
  double p = 0;
  for (auto& v : zn) p += std::norm(v);
  CHECK(p / zn.size() == doctest::Approx(1.0).epsilon(1e-12));
  cvec zero(4, {0, 0});
  CHECK_THROWS_AS(normalize_power(zero), ZeroVector);
}
