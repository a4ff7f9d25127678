#include "slscom/digital.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace slscom {

namespace {

constexpr double kMu = 255.0;
const double kLn256 = std::log(256.0);

double round_half_away(double v) {
  return v >= 0 ? std::floor(v + 0.5) : std::ceil(v - 0.5);
}

}  // namespace

std::uint8_t mulaw_encode(double x, double A, long* saturated) {
  if (x > A || x < -A) {
    if (saturated) ++*saturated;
    x = std::clamp(x, -A, A);
  }
  double v = x / A;
  double sign = v < 0 ? -1.0 : 1.0;
  double f = sign * std::log1p(kMu * std::abs(v)) / kLn256;  // in [-1, 1]
  double code = round_half_away((f + 1.0) / 2.0 * 255.0);
  return static_cast<std::uint8_t>(std::clamp(code, 0.0, 255.0));
}

double mulaw_decode(std::uint8_t code, double A) {
  double f = 2.0 * code / 255.0 - 1.0;
  double sign = f < 0 ? -1.0 : 1.0;
  return A * sign * (std::exp(std::abs(f) * kLn256) - 1.0) / kMu;
}

std::vector<std::uint8_t> mulaw_encode(const std::vector<double>& x, double A,
                                       long* saturated) {
  std::vector<std::uint8_t> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = mulaw_encode(x[i], A, saturated);
  return out;
}

std::vector<double> mulaw_decode(const std::vector<std::uint8_t>& codes, double A) {
  std::vector<double> out(codes.size());
  for (size_t i = 0; i < codes.size(); ++i) out[i] = mulaw_decode(codes[i], A);
  return out;
}

double clipping_bound(const std::vector<double>& values) {
  if (values.empty()) throw LengthError("clipping_bound: empty value list");
  double mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  double var = 0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= values.size();
  return 4.0 * std::sqrt(var);
}

std::vector<std::uint8_t> bytes_to_bits(const std::vector<std::uint8_t>& bytes) {
  std::vector<std::uint8_t> bits;
  bits.reserve(bytes.size() * 8);
  for (std::uint8_t b : bytes)
    for (int i = 7; i >= 0; --i) bits.push_back((b >> i) & 1);
  return bits;
}

std::vector<std::uint8_t> bits_to_bytes(const std::vector<std::uint8_t>& bits) {
  if (bits.size() % 8 != 0) throw LengthError("bits_to_bytes: length not a byte multiple");
  std::vector<std::uint8_t> bytes(bits.size() / 8, 0);
  for (size_t i = 0; i < bits.size(); ++i)
    bytes[i / 8] = static_cast<std::uint8_t>((bytes[i / 8] << 1) | (bits[i] & 1));
  return bytes;
}

QamMap::QamMap() {
  const double s = 1.0 / std::sqrt(6.0);
  // Gray over the real axis: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3
  const double re_of[4] = {-3.0, -1.0, 3.0, 1.0};  // indexed by (b0<<1)|b1
  for (int b0 = 0; b0 < 2; ++b0)
    for (int b1 = 0; b1 < 2; ++b1)
      for (int b2 = 0; b2 < 2; ++b2)
        table[(b0 << 2) | (b1 << 1) | b2] =
            s * cplx(re_of[(b0 << 1) | b1], b2 ? 1.0 : -1.0);
}

const QamMap& qam8_table() {
  static const QamMap map;
  return map;
}

cvec qam8_map(const std::vector<std::uint8_t>& bits) {
  if (bits.size() % 3 != 0) throw LengthError("qam8_map: bit count not a multiple of 3");
  const QamMap& m = qam8_table();
  cvec out(bits.size() / 3);
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = m.table[(bits[3 * i] << 2) | (bits[3 * i + 1] << 1) | bits[3 * i + 2]];
  return out;
}

std::vector<std::uint8_t> qam8_demap(const cvec& symbols) {
  const QamMap& m = qam8_table();
  std::vector<std::uint8_t> bits;
  bits.reserve(symbols.size() * 3);
  for (const cplx& z : symbols) {
    int best = 0;
    double best_d = std::norm(z - m.table[0]);
    for (int i = 1; i < 8; ++i) {
      double d = std::norm(z - m.table[i]);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    bits.push_back(static_cast<std::uint8_t>((best >> 2) & 1));
    bits.push_back(static_cast<std::uint8_t>((best >> 1) & 1));
    bits.push_back(static_cast<std::uint8_t>(best & 1));
  }
  return bits;
}

std::vector<std::uint8_t> NullCode::encode(const std::vector<std::uint8_t>& bits) {
  return bits;
}
std::vector<std::uint8_t> NullCode::decode(const std::vector<std::uint8_t>& bits) {
  return bits;
}

RegularLdpcCode::RegularLdpcCode(int block_bits, int iterations,
                                 std::uint64_t construction_seed)
    : n_(block_bits), m_(block_bits / 2), iters_(iterations) {
  if (n_ <= 0 || n_ % 12 != 0)
    throw LengthError("RegularLdpcCode: block size must be a positive multiple of 12");

  // (3,6)-regular socket matching; resample until checks have distinct
  // variables and the parity matrix has full row rank.
  for (std::uint64_t seed = construction_seed;; ++seed) {
    std::mt19937_64 rng(seed);
    std::vector<int> sockets;
    for (int v = 0; v < n_; ++v)
      for (int d = 0; d < 3; ++d) sockets.push_back(v);
    std::shuffle(sockets.begin(), sockets.end(), rng);

    check_vars_.assign(m_, {});
    bool distinct = true;
    for (int c = 0; c < m_ && distinct; ++c) {
      auto& row = check_vars_[c];
      row.assign(sockets.begin() + 6 * c, sockets.begin() + 6 * (c + 1));
      std::sort(row.begin(), row.end());
      distinct = std::adjacent_find(row.begin(), row.end()) == row.end();
    }
    if (!distinct) continue;

    // dense GF(2) reduced row echelon to find pivots and the generator
    std::vector<std::vector<std::uint8_t>> D(m_, std::vector<std::uint8_t>(n_, 0));
    for (int c = 0; c < m_; ++c)
      for (int v : check_vars_[c]) D[c][v] = 1;

    std::vector<int> piv_cols;
    int row = 0;
    for (int col = 0; col < n_ && row < m_; ++col) {
      int sel = -1;
      for (int r = row; r < m_; ++r)
        if (D[r][col]) {
          sel = r;
          break;
        }
      if (sel < 0) continue;
      std::swap(D[sel], D[row]);
      for (int r = 0; r < m_; ++r)
        if (r != row && D[r][col])
          for (int j = 0; j < n_; ++j) D[r][j] ^= D[row][j];
      piv_cols.push_back(col);
      ++row;
    }
    if (row < m_) continue;  // rank deficient; retry

    std::vector<std::uint8_t> is_piv(n_, 0);
    for (int c : piv_cols) is_piv[c] = 1;
    std::vector<int> info_cols;
    for (int c = 0; c < n_; ++c)
      if (!is_piv[c]) info_cols.push_back(c);

    col_perm_.clear();
    col_perm_.insert(col_perm_.end(), info_cols.begin(), info_cols.end());
    col_perm_.insert(col_perm_.end(), piv_cols.begin(), piv_cols.end());

    // row r of RREF: c[piv_cols[r]] = sum over info cols of D[r][col] * c[col]
    gen_.assign(m_, std::vector<std::uint8_t>(info_cols.size(), 0));
    for (int r = 0; r < m_; ++r)
      for (size_t j = 0; j < info_cols.size(); ++j) gen_[r][j] = D[r][info_cols[j]];

    var_checks_.assign(n_, {});
    for (int c = 0; c < m_; ++c)
      for (int v : check_vars_[c]) var_checks_[v].push_back(c);
    break;
  }
}

std::vector<std::uint8_t> RegularLdpcCode::encode(const std::vector<std::uint8_t>& bits) {
  const long k = block_info_bits();
  const long blocks = (static_cast<long>(bits.size()) + k - 1) / k;
  std::vector<std::uint8_t> out;
  out.reserve(static_cast<size_t>(blocks) * n_);
  for (long blk = 0; blk < blocks; ++blk) {
    std::vector<std::uint8_t> u(k, 0);
    for (long j = 0; j < k; ++j) {
      size_t src = static_cast<size_t>(blk * k + j);
      if (src < bits.size()) u[j] = bits[src] & 1;
    }
    std::vector<std::uint8_t> c(n_, 0);
    for (long j = 0; j < k; ++j) c[col_perm_[j]] = u[j];
    for (int r = 0; r < m_; ++r) {
      std::uint8_t p = 0;
      for (long j = 0; j < k; ++j) p ^= static_cast<std::uint8_t>(gen_[r][j] & u[j]);
      c[col_perm_[k + r]] = p;
    }
    out.insert(out.end(), c.begin(), c.end());
  }
  return out;
}

std::vector<std::uint8_t> RegularLdpcCode::decode(const std::vector<std::uint8_t>& bits) {
  if (bits.size() % static_cast<size_t>(n_) != 0)
    throw LengthError("RegularLdpcCode::decode: length not a block multiple");
  const long k = block_info_bits();
  const long blocks = static_cast<long>(bits.size()) / n_;
  std::vector<std::uint8_t> out;
  out.reserve(static_cast<size_t>(blocks) * k);

  for (long blk = 0; blk < blocks; ++blk) {
    std::vector<double> llr(n_);
    for (int v = 0; v < n_; ++v) llr[v] = bits[blk * n_ + v] ? -2.0 : 2.0;

    // min-sum message passing; messages indexed by (check, edge position)
    std::vector<std::vector<double>> c2v(m_);
    for (int c = 0; c < m_; ++c) c2v[c].assign(check_vars_[c].size(), 0.0);

    std::vector<std::uint8_t> hard(n_);
    for (int it = 0; it <= iters_; ++it) {
      std::vector<double> total = llr;
      for (int c = 0; c < m_; ++c)
        for (size_t e = 0; e < check_vars_[c].size(); ++e)
          total[check_vars_[c][e]] += c2v[c][e];
      for (int v = 0; v < n_; ++v) hard[v] = total[v] < 0 ? 1 : 0;

      bool ok = true;
      for (int c = 0; c < m_ && ok; ++c) {
        std::uint8_t s = 0;
        for (int v : check_vars_[c]) s ^= hard[v];
        ok = (s == 0);
      }
      if (ok || it == iters_) break;

      for (int c = 0; c < m_; ++c) {
        const auto& vars = check_vars_[c];
        std::vector<double> in(vars.size());
        for (size_t e = 0; e < vars.size(); ++e)
          in[e] = total[vars[e]] - c2v[c][e];  // extrinsic var-to-check
        for (size_t e = 0; e < vars.size(); ++e) {
          double sign = 1.0, mag = 1e300;
          for (size_t f = 0; f < vars.size(); ++f) {
            if (f == e) continue;
            sign *= in[f] < 0 ? -1.0 : 1.0;
            mag = std::min(mag, std::abs(in[f]));
          }
          c2v[c][e] = sign * mag;
        }
      }
    }

    for (long j = 0; j < k; ++j) out.push_back(hard[col_perm_[j]]);
  }
  return out;
}

long hybrid_symbol_count(long semantic_len, const Rational& rate) {
  long long coded = 8LL * semantic_len * rate.den;
  // ceil over the rational: coded bits = 8 L_s / rate, then 3 bits per symbol
  long long num = rate.num;
  long long coded_bits = (coded + num - 1) / num;
  return static_cast<long>((coded_bits + 2) / 3);
}

std::vector<double> hybrid_transmit(const std::vector<double>& x, double A,
                                    ChannelCodeInterface& code,
                                    const OfdmParams& ofdm,
                                    const ChannelParams& channel, double snr_db,
                                    const CGrid& pilots,
                                    std::mt19937_64& channel_rng,
                                    std::mt19937_64& noise_rng, HybridStats* stats) {
  const long Ls = static_cast<long>(x.size());
  long saturated = 0;
  std::vector<std::uint8_t> codes = mulaw_encode(x, A, &saturated);
  std::vector<std::uint8_t> bits = bytes_to_bits(codes);
  std::vector<std::uint8_t> coded = code.encode(bits);
  const long coded_len = static_cast<long>(coded.size());

  std::vector<std::uint8_t> padded = coded;
  while (padded.size() % 3 != 0) padded.push_back(0);
  cvec syms = qam8_map(padded);
  const long n_syms = static_cast<long>(syms.size());

  const int K = ofdm.subcarriers, Ns = ofdm.data_symbols;
  const long cap = static_cast<long>(K) * Ns;
  const long frames = (n_syms + cap - 1) / cap;

  cvec eq_syms;
  eq_syms.reserve(static_cast<size_t>(frames) * cap);
  for (long f = 0; f < frames; ++f) {
    CGrid data(K, Ns);
    for (long s = 0; s < cap; ++s) {
      long g = f * cap + s;
      data.v[s] = g < n_syms ? syms[g] : cplx{0, 0};
    }
    ChannelRealization ch = sample_channel(channel, K, channel_rng);
    double sigma2 = std::isinf(snr_db) ? 0.0 : calibrate_noise(ch.freq, data, snr_db);
    CGrid data_hat, pilots_hat;
    transmit_freq(data, pilots, ch.freq, std::sqrt(sigma2), noise_rng, data_hat,
                  pilots_hat);
    cvec freq_hat = ls_estimate(pilots_hat, pilots);
    CGrid eq = mmse_equalize(data_hat, freq_hat, sigma2);
    eq_syms.insert(eq_syms.end(), eq.v.begin(), eq.v.end());
  }

  eq_syms.resize(static_cast<size_t>(n_syms));
  std::vector<std::uint8_t> rx_bits = qam8_demap(eq_syms);
  rx_bits.resize(static_cast<size_t>(coded_len));
  std::vector<std::uint8_t> decoded = code.decode(rx_bits);
  decoded.resize(static_cast<size_t>(8 * Ls));
  std::vector<double> x_hat = mulaw_decode(bits_to_bytes(decoded), A);

  if (stats) {
    stats->qam_symbols = n_syms;
    stats->frames = frames;
    stats->saturated = saturated;
  }
  return x_hat;
}

}  // namespace slscom
