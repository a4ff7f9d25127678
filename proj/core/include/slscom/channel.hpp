#pragma once

#include <complex>
#include <random>
#include <stdexcept>
#include <vector>

#include "slscom/config.hpp"

namespace slscom {

using cplx = std::complex<double>;
using cvec = std::vector<cplx>;

struct ChannelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ZeroVector : ChannelError {
  using ChannelError::ChannelError;
};
struct ZeroPilot : ChannelError {
  using ChannelError::ChannelError;
};
struct DimensionMismatch : ChannelError {
  using ChannelError::ChannelError;
};

// Complex grid stored column-major by OFDM symbol: entry (k, i) at [i*K + k].
struct CGrid {
  int K = 0;
  int symbols = 0;
  cvec v;

  CGrid() = default;
  CGrid(int K, int symbols) : K(K), symbols(symbols), v(static_cast<size_t>(K) * symbols) {}
  cplx& at(int k, int i) { return v[static_cast<size_t>(i) * K + k]; }
  const cplx& at(int k, int i) const { return v[static_cast<size_t>(i) * K + k]; }
};

// L_h taps plus the K-point frequency response derived from them.
struct ChannelRealization {
  cvec taps;   // h, length L_h
  cvec freq;   // H, length K
};

// taps drawn i.i.d. CN(0, p_l) with the normalized exponential profile
// p_l = e^{-(l-1)*decay} / sum_j e^{-j*decay}; sum_l p_l = 1.
ChannelRealization sample_channel(const ChannelParams& params, int subcarriers,
                                  std::mt19937_64& rng);

std::vector<double> tap_power_profile(int path_count, double decay);

// K-point frequency response of zero-padded taps.
cvec channel_frequency_response(const cvec& taps, int subcarriers);

// Rescales so that ||z||^2 / z.size() == 1.
cvec normalize_power(const cvec& z);

// Unitary DFT/IDFT (scaling 1/sqrt(K) both directions); length must be a power of two.
void fft_unitary(cvec& x, bool inverse);

// Fixed QPSK-like pilot grid, (+-1 +- j)/sqrt(2), drawn once per experiment.
CGrid make_pilot_grid(const OfdmParams& ofdm, std::mt19937_64& channel_rng);

// IDFT per symbol + CP; frame layout: pilot symbols first, then data symbols.
// Returns (K + L_cp) * (N_p + N_s) time samples.
cvec ofdm_modulate(const CGrid& data, const CGrid& pilots, const OfdmParams& ofdm);

// Linear convolution with the taps, truncated to the input length, plus
// CN(0, sigma^2) noise per sample.
cvec transmit_time(const cvec& time_in, const cvec& taps, double sigma,
                   std::mt19937_64& noise_rng);

// CP removal + DFT; splits pilots (first N_p symbols) from data.
void ofdm_demodulate(const cvec& time_out, const OfdmParams& ofdm, CGrid& data_hat,
                     CGrid& pilots_hat);

// Frequency-domain equivalent: Zhat[k,i] = H[k] Z[k,i] + N[k,i].
void transmit_freq(const CGrid& data, const CGrid& pilots, const cvec& freq,
                   double sigma, std::mt19937_64& noise_rng, CGrid& data_hat,
                   CGrid& pilots_hat);

// sigma^2 from the average per-subcarrier SNR definition.
double calibrate_noise(const cvec& freq, const CGrid& data, double snr_db);

// Per-subcarrier pilot average: Hhat[k] = (1/N_p) sum_j Zp_hat[k,j] / Zp[k,j].
cvec ls_estimate(const CGrid& pilots_hat, const CGrid& pilots);

// Z_eq[k,i] = conj(Hhat[k]) Zhat[k,i] / (|Hhat[k]|^2 + sigma^2).
CGrid mmse_equalize(const CGrid& data_hat, const cvec& freq_hat, double sigma2);

}  // namespace slscom
