#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace slscom {

// Named, mutually independent random streams.  Every stream is a pure
// function of (master_seed, stream_name); drawing from one stream never
// advances another.
class RngStreams {
public:
  explicit RngStreams(std::uint64_t master_seed);

  std::mt19937_64& data() { return data_; }
  std::mt19937_64& augment() { return augment_; }
  std::mt19937_64& channel() { return channel_; }
  std::mt19937_64& noise() { return noise_; }
  std::mt19937_64& init() { return init_; }

  std::uint64_t master_seed() const { return master_seed_; }

  // Seed for an indexed substream (per-frame, per-run...), independent of
  // how much the parent stream has been consumed.
  static std::uint64_t substream_seed(std::uint64_t master_seed,
                                      std::string_view name,
                                      std::uint64_t index);

  static std::mt19937_64 make_stream(std::uint64_t master_seed,
                                     std::string_view name);

private:
  std::uint64_t master_seed_;
  std::mt19937_64 data_, augment_, channel_, noise_, init_;
};

// 64-bit FNV-1a, used for stream naming and config fingerprints.
std::uint64_t fnv1a64(std::string_view bytes);

// splitmix64 finalizer; decorrelates nearby seeds.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace slscom
