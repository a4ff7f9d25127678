#include "slscom/rng.hpp"

namespace slscom {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::mt19937_64 RngStreams::make_stream(std::uint64_t master_seed,
                                        std::string_view name) {
  return std::mt19937_64(splitmix64(master_seed ^ fnv1a64(name)));
}

std::uint64_t RngStreams::substream_seed(std::uint64_t master_seed,
                                         std::string_view name,
                                         std::uint64_t index) {
  return splitmix64(splitmix64(master_seed ^ fnv1a64(name)) + index);
}

RngStreams::RngStreams(std::uint64_t master_seed)
    : master_seed_(master_seed),
      data_(make_stream(master_seed, "data")),
      augment_(make_stream(master_seed, "augment")),
      channel_(make_stream(master_seed, "channel")),
      noise_(make_stream(master_seed, "noise")),
      init_(make_stream(master_seed, "init")) {}

}  // namespace slscom
