#include <benchmark/benchmark.h>

#include <random>

#include "slscom/channel.hpp"
#include "slscom/networks.hpp"
#include "slscom/nn.hpp"

using namespace slscom;

static void BM_OfdmFrameRoundtrip(benchmark::State& state) {
  OfdmParams ofdm;
  ChannelParams chp;
  std::mt19937_64 rng(1), noise(2);
  CGrid pilots = make_pilot_grid(ofdm, rng);
  CGrid data(ofdm.subcarriers, ofdm.data_symbols);
  std::normal_distribution<double> g(0, 1);
  for (auto& z : data.v) z = cplx(g(rng), g(rng)) / std::sqrt(2.0);

  for (auto _ : state) {
    ChannelRealization ch = sample_channel(chp, ofdm.subcarriers, rng);
    cvec t = ofdm_modulate(data, pilots, ofdm);
    cvec r = transmit_time(t, ch.taps, 0.1, noise);
    CGrid data_hat, pilots_hat;
    ofdm_demodulate(r, ofdm, data_hat, pilots_hat);
    cvec freq_hat = ls_estimate(pilots_hat, pilots);
    benchmark::DoNotOptimize(mmse_equalize(data_hat, freq_hat, 0.01));
  }
}
BENCHMARK(BM_OfdmFrameRoundtrip);

static void BM_FftUnitary64(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0, 1);
  cvec x(64);
  for (auto& z : x) z = cplx(g(rng), g(rng));
  for (auto _ : state) {
    fft_unitary(x, false);
    benchmark::DoNotOptimize(x.data());
  }
}
BENCHMARK(BM_FftUnitary64);

static void BM_Conv2dForward(benchmark::State& state) {
  std::mt19937_64 rng(1);
  nn::Conv2d conv(3, 16, 3, 2, 1, rng);
  ag::Tensor x({static_cast<long>(state.range(0)), 3, 32, 32});
  std::normal_distribution<double> g(0, 1);
  for (long i = 0; i < x.size(); ++i) x.data[i] = g(rng);
  for (auto _ : state) benchmark::DoNotOptimize(conv.forward(ag::constant(x)));
}
BENCHMARK(BM_Conv2dForward)->Arg(8)->Arg(32);

static void BM_EncoderForward(benchmark::State& state) {
  std::mt19937_64 rng(1);
  SemanticEncoder enc(EncoderPreset::desk_cnn, 3, rng);
  ag::Tensor x({8, 3, 32, 32});
  std::normal_distribution<double> g(0, 1);
  for (long i = 0; i < x.size(); ++i) x.data[i] = 0.5 + 0.1 * g(rng);
  for (auto _ : state)
    benchmark::DoNotOptimize(enc.forward(ag::constant(x), false));
}
BENCHMARK(BM_EncoderForward);

BENCHMARK_MAIN();
