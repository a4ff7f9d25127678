#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "slscom/config.hpp"

namespace slscom {

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TruncatedRecord : DataError {
  using DataError::DataError;
};
struct UnknownLabel : DataError {
  using DataError::DataError;
};
struct InfeasibleSplit : DataError {
  using DataError::DataError;
};

constexpr std::int16_t kUnlabeled = -1;

// Images stored channel-planar (C,H,W), float pixels in [0,1].
// label -1 marks an unlabeled sample.
class Dataset {
public:
  int channels = 3, height = 32, width = 32;
  int class_count = 10;
  std::vector<float> pixels;        // count * C*H*W
  std::vector<std::int16_t> labels; // count

  long count() const { return static_cast<long>(labels.size()); }
  long sample_len() const { return static_cast<long>(channels) * height * width; }
  const float* sample(long i) const { return pixels.data() + i * sample_len(); }
  std::int16_t label(long i) const { return labels[i]; }

  Dataset subset(const std::vector<long>& indices, bool strip_labels = false) const;
};

// Standard CIFAR-10 binary batch: 3073-byte records, 1 label byte +
// 3072 channel-planar pixel bytes, pixels scaled by 1/255.
Dataset import_cifar10_file(const std::string& path);
// Loads data_batch_1..5.bin (train=true) or test_batch.bin from a directory.
Dataset import_cifar10_binary(const std::string& dir, bool train = true);

// Repo raw container (see docs/raw_container.md): magic "SLSRAW01",
// u32 channels/height/width/count/class_count, u8 label_bytes, then per
// record the little-endian label followed by u8 pixel planes.
Dataset import_raw(const std::string& path);
void export_raw(const Dataset& ds, const std::string& path);

struct SplitSet {
  Dataset unlabeled;  // D_r, labels stripped
  Dataset labeled;    // D_s
  Dataset val;
  Dataset test;
};

// Carves D_r, D_s and val out of `train` (disjoint unless spec.allow_overlap),
// honoring excluded classes and per-class-uniform sampling for D_s; `test`
// passes through.
SplitSet make_splits(const Dataset& train, const Dataset& test, const SplitSpec& spec,
                     std::mt19937_64& rng);

// One epoch of shuffled full batches; the remainder below batch_size is dropped.
std::vector<std::vector<long>> minibatches(long count, int batch_size,
                                           std::mt19937_64& rng);

// Procedurally generated 10-class shape/texture dataset written in the
// CIFAR-10 binary layout (data_batch_1..5.bin + test_batch.bin).  Stands in
// for CIFAR-10 where the real archive is unavailable.
void write_synthetic_cifar10(const std::string& dir, long train_count,
                             long test_count, std::uint64_t seed);

}  // namespace slscom
