#include "slscom/channel.hpp"

#include <cmath>
#include <numbers>

namespace slscom {

namespace {

bool is_pow2(int n) { return n >= 1 && (n & (n - 1)) == 0; }

cplx draw_cn(double variance, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, std::sqrt(variance / 2.0));
  double re = g(rng);
  double im = g(rng);
  return {re, im};
}

}  // namespace

std::vector<double> tap_power_profile(int path_count, double decay) {
  std::vector<double> p(path_count);
  double sum = 0;
  for (int l = 0; l < path_count; ++l) {
    p[l] = std::exp(-decay * l);
    sum += p[l];
  }
  for (double& v : p) v /= sum;
  return p;
}

cvec channel_frequency_response(const cvec& taps, int subcarriers) {
  cvec H(subcarriers);
  const double w = -2.0 * std::numbers::pi / subcarriers;
  for (int k = 0; k < subcarriers; ++k) {
    cplx acc = 0;
    for (size_t l = 0; l < taps.size(); ++l)
      acc += taps[l] * std::polar(1.0, w * static_cast<double>(l) * k);
    H[k] = acc;
  }
  return H;
}

ChannelRealization sample_channel(const ChannelParams& params, int subcarriers,
                                  std::mt19937_64& rng) {
  auto profile = tap_power_profile(params.path_count, params.decay);
  ChannelRealization c;
  c.taps.resize(params.path_count);
  for (int l = 0; l < params.path_count; ++l) c.taps[l] = draw_cn(profile[l], rng);
  c.freq = channel_frequency_response(c.taps, subcarriers);
  return c;
}

cvec normalize_power(const cvec& z) {
  double energy = 0;
  for (const cplx& v : z) energy += std::norm(v);
  if (energy == 0.0) throw ZeroVector("normalize_power: all-zero input");
  double scale = std::sqrt(static_cast<double>(z.size()) / energy);
  cvec out(z.size());
  for (size_t i = 0; i < z.size(); ++i) out[i] = z[i] * scale;
  return out;
}

void fft_unitary(cvec& x, bool inverse) {
  const size_t n = x.size();
  if (!is_pow2(static_cast<int>(n))) throw DimensionMismatch("fft: length not a power of two");
  // bit reversal
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    double ang = 2.0 * std::numbers::pi / static_cast<double>(len) * (inverse ? 1 : -1);
    cplx wl = std::polar(1.0, ang);
    for (size_t i = 0; i < n; i += len) {
      cplx w = 1;
      for (size_t j = 0; j < len / 2; ++j) {
        cplx u = x[i + j];
        cplx v = x[i + j + len / 2] * w;
        x[i + j] = u + v;
        x[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (cplx& v : x) v *= scale;
}

CGrid make_pilot_grid(const OfdmParams& ofdm, std::mt19937_64& channel_rng) {
  CGrid p(ofdm.subcarriers, ofdm.pilot_symbols);
  const double a = 1.0 / std::sqrt(2.0);
  std::uniform_int_distribution<int> bit(0, 1);
  for (auto& v : p.v) {
    double re = bit(channel_rng) ? a : -a;
    double im = bit(channel_rng) ? a : -a;
    v = {re, im};
  }
  return p;
}

cvec ofdm_modulate(const CGrid& data, const CGrid& pilots, const OfdmParams& ofdm) {
  const int K = ofdm.subcarriers;
  if (data.K != K || pilots.K != K || data.symbols != ofdm.data_symbols ||
      pilots.symbols != ofdm.pilot_symbols)
    throw DimensionMismatch("ofdm_modulate: grid dimensions");
  const int Lcp = ofdm.cp_length;
  const int total = ofdm.pilot_symbols + ofdm.data_symbols;
  cvec out;
  out.reserve(static_cast<size_t>(K + Lcp) * total);
  auto emit = [&](const cplx* sym) {
    cvec t(sym, sym + K);
    fft_unitary(t, /*inverse=*/true);
    for (int i = 0; i < Lcp; ++i) out.push_back(t[K - Lcp + i]);
    for (int i = 0; i < K; ++i) out.push_back(t[i]);
  };
  for (int i = 0; i < pilots.symbols; ++i) emit(&pilots.v[static_cast<size_t>(i) * K]);
  for (int i = 0; i < data.symbols; ++i) emit(&data.v[static_cast<size_t>(i) * K]);
  return out;
}

cvec transmit_time(const cvec& time_in, const cvec& taps, double sigma,
                   std::mt19937_64& noise_rng) {
  cvec out(time_in.size());
  for (size_t i = 0; i < time_in.size(); ++i) {
    cplx acc = 0;
    size_t lmax = std::min(taps.size(), i + 1);
    for (size_t l = 0; l < lmax; ++l) acc += taps[l] * time_in[i - l];
    out[i] = acc;
    if (sigma > 0) out[i] += draw_cn(sigma * sigma, noise_rng);
  }
  return out;
}

void ofdm_demodulate(const cvec& time_out, const OfdmParams& ofdm, CGrid& data_hat,
                     CGrid& pilots_hat) {
  const int K = ofdm.subcarriers;
  const int Lcp = ofdm.cp_length;
  const int total = ofdm.pilot_symbols + ofdm.data_symbols;
  if (time_out.size() != static_cast<size_t>(K + Lcp) * total)
    throw DimensionMismatch("ofdm_demodulate: frame length");
  pilots_hat = CGrid(K, ofdm.pilot_symbols);
  data_hat = CGrid(K, ofdm.data_symbols);
  for (int s = 0; s < total; ++s) {
    const cplx* base = time_out.data() + static_cast<size_t>(s) * (K + Lcp) + Lcp;
    cvec t(base, base + K);
    fft_unitary(t, /*inverse=*/false);
    cplx* dst = (s < ofdm.pilot_symbols)
                    ? &pilots_hat.v[static_cast<size_t>(s) * K]
                    : &data_hat.v[static_cast<size_t>(s - ofdm.pilot_symbols) * K];
    std::copy(t.begin(), t.end(), dst);
  }
}

void transmit_freq(const CGrid& data, const CGrid& pilots, const cvec& freq,
                   double sigma, std::mt19937_64& noise_rng, CGrid& data_hat,
                   CGrid& pilots_hat) {
  const int K = data.K;
  if (static_cast<int>(freq.size()) != K) throw DimensionMismatch("transmit_freq: H length");
  pilots_hat = CGrid(K, pilots.symbols);
  data_hat = CGrid(K, data.symbols);
  // pilots first, mirroring the time-domain frame order
  for (int i = 0; i < pilots.symbols; ++i)
    for (int k = 0; k < K; ++k) {
      cplx n = sigma > 0 ? draw_cn(sigma * sigma, noise_rng) : cplx{0, 0};
      pilots_hat.at(k, i) = freq[k] * pilots.at(k, i) + n;
    }
  for (int i = 0; i < data.symbols; ++i)
    for (int k = 0; k < K; ++k) {
      cplx n = sigma > 0 ? draw_cn(sigma * sigma, noise_rng) : cplx{0, 0};
      data_hat.at(k, i) = freq[k] * data.at(k, i) + n;
    }
}

double calibrate_noise(const cvec& freq, const CGrid& data, double snr_db) {
  double num = 0;
  for (int i = 0; i < data.symbols; ++i)
    for (int k = 0; k < data.K; ++k) num += std::norm(freq[k] * data.at(k, i));
  double denom = static_cast<double>(data.K) * data.symbols * std::pow(10.0, snr_db / 10.0);
  return num / denom;
}

cvec ls_estimate(const CGrid& pilots_hat, const CGrid& pilots) {
  if (pilots_hat.K != pilots.K || pilots_hat.symbols != pilots.symbols)
    throw DimensionMismatch("ls_estimate: grid dimensions");
  cvec H(pilots.K);
  for (int k = 0; k < pilots.K; ++k) {
    cplx acc = 0;
    for (int j = 0; j < pilots.symbols; ++j) {
      if (pilots.at(k, j) == cplx{0, 0}) throw ZeroPilot("ls_estimate: zero pilot symbol");
      acc += pilots_hat.at(k, j) / pilots.at(k, j);
    }
    H[k] = acc / static_cast<double>(pilots.symbols);
  }
  return H;
}

CGrid mmse_equalize(const CGrid& data_hat, const cvec& freq_hat, double sigma2) {
  if (static_cast<int>(freq_hat.size()) != data_hat.K)
    throw DimensionMismatch("mmse_equalize: H length");
  CGrid out(data_hat.K, data_hat.symbols);
  for (int i = 0; i < data_hat.symbols; ++i)
    for (int k = 0; k < data_hat.K; ++k) {
      cplx h = freq_hat[k];
      out.at(k, i) = std::conj(h) * data_hat.at(k, i) / (std::norm(h) + sigma2);
    }
  return out;
}

}  // namespace slscom
