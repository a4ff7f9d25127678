#include "slscom/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace slscom {

namespace {

constexpr long kCifarRecord = 3073;
constexpr long kCifarPixels = 3072;

std::vector<std::uint8_t> read_all(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open: " + path);
  f.seekg(0, std::ios::end);
  std::streamsize n = f.tellg();
  f.seekg(0);
  std::vector<std::uint8_t> buf(static_cast<size_t>(n));
  f.read(reinterpret_cast<char*>(buf.data()), n);
  return buf;
}

void append_cifar_records(Dataset& ds, const std::string& path) {
  auto buf = read_all(path);
  if (buf.size() % kCifarRecord != 0)
    throw TruncatedRecord(path + ": size " + std::to_string(buf.size()) +
                          " not a multiple of 3073");
  long n = static_cast<long>(buf.size()) / kCifarRecord;
  ds.pixels.reserve(ds.pixels.size() + n * kCifarPixels);
  ds.labels.reserve(ds.labels.size() + n);
  for (long r = 0; r < n; ++r) {
    const std::uint8_t* rec = buf.data() + r * kCifarRecord;
    if (rec[0] > 9)
      throw UnknownLabel(path + ": record " + std::to_string(r) + " has label " +
                         std::to_string(rec[0]));
    ds.labels.push_back(rec[0]);
    for (long i = 0; i < kCifarPixels; ++i)
      ds.pixels.push_back(static_cast<float>(rec[1 + i]) / 255.0f);
  }
}

}  // namespace

Dataset Dataset::subset(const std::vector<long>& indices, bool strip_labels) const {
  Dataset out;
  out.channels = channels;
  out.height = height;
  out.width = width;
  out.class_count = class_count;
  long len = sample_len();
  out.pixels.reserve(indices.size() * len);
  out.labels.reserve(indices.size());
  for (long i : indices) {
    const float* s = sample(i);
    out.pixels.insert(out.pixels.end(), s, s + len);
    out.labels.push_back(strip_labels ? kUnlabeled : labels[i]);
  }
  return out;
}

Dataset import_cifar10_file(const std::string& path) {
  Dataset ds;
  append_cifar_records(ds, path);
  return ds;
}

Dataset import_cifar10_binary(const std::string& dir, bool train) {
  Dataset ds;
  if (train) {
    for (int b = 1; b <= 5; ++b)
      append_cifar_records(ds, dir + "/data_batch_" + std::to_string(b) + ".bin");
  } else {
    append_cifar_records(ds, dir + "/test_batch.bin");
  }
  return ds;
}

Dataset import_raw(const std::string& path) {
  auto buf = read_all(path);
  const char magic[8] = {'S', 'L', 'S', 'R', 'A', 'W', '0', '1'};
  if (buf.size() < 8 + 5 * 4 + 1 || std::memcmp(buf.data(), magic, 8) != 0)
    throw DataError(path + ": not a SLSRAW01 container");
  auto u32 = [&](size_t off) {
    return static_cast<std::uint32_t>(buf[off]) |
           (static_cast<std::uint32_t>(buf[off + 1]) << 8) |
           (static_cast<std::uint32_t>(buf[off + 2]) << 16) |
           (static_cast<std::uint32_t>(buf[off + 3]) << 24);
  };
  Dataset ds;
  ds.channels = static_cast<int>(u32(8));
  ds.height = static_cast<int>(u32(12));
  ds.width = static_cast<int>(u32(16));
  long count = static_cast<long>(u32(20));
  ds.class_count = static_cast<int>(u32(24));
  int label_bytes = buf[28];
  if (label_bytes != 1 && label_bytes != 2)
    throw DataError(path + ": label_bytes must be 1 or 2");
  long len = ds.sample_len();
  size_t off = 29;
  size_t need = off + static_cast<size_t>(count) * (label_bytes + len);
  if (buf.size() < need) throw TruncatedRecord(path + ": body shorter than header claims");
  ds.pixels.reserve(count * len);
  ds.labels.reserve(count);
  for (long r = 0; r < count; ++r) {
    long lab = buf[off];
    if (label_bytes == 2) lab |= static_cast<long>(buf[off + 1]) << 8;
    off += label_bytes;
    if (lab >= ds.class_count)
      throw UnknownLabel(path + ": record " + std::to_string(r) + " has label " +
                         std::to_string(lab));
    ds.labels.push_back(static_cast<std::int16_t>(lab));
    for (long i = 0; i < len; ++i)
      ds.pixels.push_back(static_cast<float>(buf[off + i]) / 255.0f);
    off += len;
  }
  return ds;
}

void export_raw(const Dataset& ds, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write: " + path);
  f.write("SLSRAW01", 8);
  auto u32 = [&](std::uint32_t v) {
    char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8),
                 static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
    f.write(b, 4);
  };
  u32(ds.channels);
  u32(ds.height);
  u32(ds.width);
  u32(static_cast<std::uint32_t>(ds.count()));
  u32(ds.class_count);
  char lb = 1;
  f.put(lb);
  long len = ds.sample_len();
  for (long r = 0; r < ds.count(); ++r) {
    f.put(static_cast<char>(std::max<std::int16_t>(ds.labels[r], 0)));
    const float* s = ds.sample(r);
    for (long i = 0; i < len; ++i)
      f.put(static_cast<char>(std::lround(std::clamp(s[i], 0.0f, 1.0f) * 255.0f)));
  }
}

SplitSet make_splits(const Dataset& train, const Dataset& test, const SplitSpec& spec,
                     std::mt19937_64& rng) {
  const long n = train.count();
  std::vector<long> order(n);
  for (long i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);

  auto eligible = [&](long i) {
    return train.labels[i] != kUnlabeled &&
           !spec.excluded_classes.count(train.labels[i]);
  };

  std::vector<char> used(n, 0);
  std::vector<long> labeled_idx;

  if (spec.per_class_uniform) {
    std::vector<int> classes;
    for (int c = 0; c < train.class_count; ++c)
      if (!spec.excluded_classes.count(c)) classes.push_back(c);
    if (classes.empty() || spec.labeled_count % classes.size() != 0)
      throw InfeasibleSplit("per_class_uniform: labeled_count not divisible by class count");
    long per_class = spec.labeled_count / static_cast<long>(classes.size());
    std::vector<long> taken(train.class_count, 0);
    for (long i : order) {
      if (!eligible(i)) continue;
      int c = train.labels[i];
      if (taken[c] < per_class) {
        labeled_idx.push_back(i);
        used[i] = 1;
        ++taken[c];
      }
    }
    for (int c : classes)
      if (taken[c] != per_class)
        throw InfeasibleSplit("per_class_uniform: class " + std::to_string(c) +
                              " has only " + std::to_string(taken[c]) + " samples");
  } else {
    for (long i : order) {
      if (static_cast<long>(labeled_idx.size()) >= spec.labeled_count) break;
      if (eligible(i)) {
        labeled_idx.push_back(i);
        used[i] = 1;
      }
    }
    if (static_cast<long>(labeled_idx.size()) < spec.labeled_count)
      throw InfeasibleSplit("not enough labeled samples for M2=" +
                            std::to_string(spec.labeled_count));
  }

  long val_count = std::lround(spec.val_fraction * spec.labeled_count);
  std::vector<long> val_idx;
  for (long i : order) {
    if (static_cast<long>(val_idx.size()) >= val_count) break;
    if (!used[i] && eligible(i)) {
      val_idx.push_back(i);
      used[i] = 1;
    }
  }
  if (static_cast<long>(val_idx.size()) < val_count)
    throw InfeasibleSplit("not enough samples left for the validation split");

  std::vector<long> unlabeled_idx;
  for (long i : order) {
    if (static_cast<long>(unlabeled_idx.size()) >= spec.unlabeled_count) break;
    if (spec.allow_overlap || !used[i]) unlabeled_idx.push_back(i);
  }
  if (static_cast<long>(unlabeled_idx.size()) < spec.unlabeled_count)
    throw InfeasibleSplit("not enough samples left for M1=" +
                          std::to_string(spec.unlabeled_count));

  SplitSet out;
  out.unlabeled = train.subset(unlabeled_idx, /*strip_labels=*/true);
  out.labeled = train.subset(labeled_idx);
  out.val = train.subset(val_idx);
  out.test = test;
  return out;
}

std::vector<std::vector<long>> minibatches(long count, int batch_size,
                                           std::mt19937_64& rng) {
  if (batch_size < 1) throw DataError("batch_size must be >= 1");
  std::vector<long> order(count);
  for (long i = 0; i < count; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  long n_batches = count / batch_size;
  std::vector<std::vector<long>> out;
  out.reserve(n_batches);
  for (long b = 0; b < n_batches; ++b)
    out.emplace_back(order.begin() + b * batch_size,
                     order.begin() + (b + 1) * batch_size);
  return out;
}

// ---- synthetic stand-in dataset ----
namespace {

struct SynthParams {
  double cx, cy, scale, phase;
  int period;
  double fg[3], bg[3], noise;
};

// class identity is carried by geometry only; colors are nuisance
double shape_value(int cls, double x, double y, const SynthParams& p) {
  // coordinates relative to the jittered center, in units of half-extent
  double dx = (x - p.cx) / (10.0 * p.scale);
  double dy = (y - p.cy) / (10.0 * p.scale);
  double r = std::sqrt(dx * dx + dy * dy);
  auto stripe = [&](double t) {
    return std::fmod(std::abs(t + p.phase), static_cast<double>(p.period)) <
                   p.period / 2.0
               ? 1.0
               : 0.0;
  };
  switch (cls) {
    case 0: return r < 1.0 ? 1.0 : 0.0;                      // disc
    case 1: return (r < 1.0 && r > 0.55) ? 1.0 : 0.0;        // ring
    case 2: return (std::abs(dx) < 0.9 && std::abs(dy) < 0.9) ? 1.0 : 0.0;  // square
    case 3: {                                                // square outline
      double m = std::max(std::abs(dx), std::abs(dy));
      return (m < 0.95 && m > 0.55) ? 1.0 : 0.0;
    }
    case 4: return (dy > -0.8 && dy < 0.9 && std::abs(dx) < (dy + 0.8) * 0.6) ? 1.0 : 0.0;  // triangle
    case 5: return (std::abs(dx) < 0.3 || std::abs(dy) < 0.3) &&
                           (std::abs(dx) < 1.0 && std::abs(dy) < 1.0)
                       ? 1.0
                       : 0.0;                                 // cross
    case 6: return stripe(y);                                 // horizontal stripes
    case 7: return stripe(x);                                 // vertical stripes
    case 8: return stripe(x) == stripe(y) ? 1.0 : 0.0;        // checkerboard
    case 9: {                                                 // dot grid
      double gx = std::fmod(x + p.phase, static_cast<double>(p.period + 2)) -
                  (p.period + 2) / 2.0;
      double gy = std::fmod(y + p.phase, static_cast<double>(p.period + 2)) -
                  (p.period + 2) / 2.0;
      return (gx * gx + gy * gy) < 2.6 ? 1.0 : 0.0;
    }
    default: return 0.0;
  }
}

void write_batch(const std::string& path, long count, long label_offset,
                 std::mt19937_64& rng) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write: " + path);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (long r = 0; r < count; ++r) {
    // round-robin labels keep every class balanced at any dataset size
    int cls = static_cast<int>((label_offset + r) % 10);
    SynthParams p;
    p.cx = 15.5 + (uni(rng) - 0.5) * 10.0;
    p.cy = 15.5 + (uni(rng) - 0.5) * 10.0;
    p.scale = 0.6 + uni(rng) * 0.6;
    p.phase = uni(rng) * 8.0;
    p.period = 4 + static_cast<int>(uni(rng) * 3.0);
    for (int c = 0; c < 3; ++c) p.bg[c] = uni(rng) * 0.6;
    // force contrast between foreground and background
    for (int c = 0; c < 3; ++c) p.fg[c] = std::min(1.0, p.bg[c] + 0.35 + uni(rng) * 0.55);
    p.noise = 0.04 + uni(rng) * 0.06;

    std::uint8_t rec[3073];
    rec[0] = static_cast<std::uint8_t>(cls);
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) {
        double m = shape_value(cls, x, y, p);
        for (int c = 0; c < 3; ++c) {
          double v = p.bg[c] + m * (p.fg[c] - p.bg[c]) + gauss(rng) * p.noise;
          v = std::clamp(v, 0.0, 1.0);
          rec[1 + c * 1024 + y * 32 + x] = static_cast<std::uint8_t>(std::lround(v * 255.0));
        }
      }
    f.write(reinterpret_cast<char*>(rec), sizeof(rec));
  }
}

}  // namespace

void write_synthetic_cifar10(const std::string& dir, long train_count,
                             long test_count, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(seed);
  long per_batch = (train_count + 4) / 5;
  long remaining = train_count, offset = 0;
  for (int b = 1; b <= 5; ++b) {
    long n = std::min(per_batch, remaining);
    remaining -= n;
    write_batch(dir + "/data_batch_" + std::to_string(b) + ".bin", n, offset, rng);
    offset += n;
  }
  write_batch(dir + "/test_batch.bin", test_count, 0, rng);
}

}  // namespace slscom
