#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "slscom/dataio.hpp"
#include "slscom/rng.hpp"

using namespace slscom;
namespace fs = std::filesystem;

namespace {

std::string tmp_path(const std::string& name) {
  return (fs::temp_directory_path() / name).string();
}

void write_cifar_records(const std::string& path, int count, bool truncate_last,
                         int bad_label = -1) {
  std::ofstream f(path, std::ios::binary);
  for (int r = 0; r < count; ++r) {
    unsigned char label = bad_label >= 0 && r == count - 1
                              ? static_cast<unsigned char>(bad_label)
                              : static_cast<unsigned char>(r % 10);
    f.put(static_cast<char>(label));
    int pix = (truncate_last && r == count - 1) ? 100 : 3072;
    for (int i = 0; i < pix; ++i) f.put(static_cast<char>((r * 31 + i) % 256));
  }
}

}  // namespace

TEST_CASE("cifar binary import") {
  std::string p = tmp_path("ut_cifar.bin");
  write_cifar_records(p, 3, false);
  Dataset ds = import_cifar10_file(p);
  CHECK(ds.count() == 3);
  CHECK(ds.label(1) == 1);
  CHECK(ds.sample(0)[0] == doctest::Approx(0.0 / 255));
  CHECK(ds.sample(1)[0] == doctest::Approx(31.0 / 255));
  std::remove(p.c_str());
}

TEST_CASE("cifar import rejects truncated records") {
  std::string p = tmp_path("ut_cifar_trunc.bin");
  write_cifar_records(p, 2, true);
  CHECK_THROWS_AS(import_cifar10_file(p), TruncatedRecord);
  std::remove(p.c_str());
}

TEST_CASE("cifar import rejects unknown labels") {
  std::string p = tmp_path("ut_cifar_label.bin");
  write_cifar_records(p, 2, false, 17);
  CHECK_THROWS_AS(import_cifar10_file(p), UnknownLabel);
  std::remove(p.c_str());
}

TEST_CASE("raw container roundtrip") {
  std::string dir = tmp_path("ut_raw_data");
  write_synthetic_cifar10(dir, 40, 10, 11);
  Dataset ds = import_cifar10_binary(dir, true);
  std::string p = tmp_path("ut_roundtrip.raw");
  export_raw(ds, p);
  Dataset back = import_raw(p);
  REQUIRE(back.count() == ds.count());
  CHECK(back.labels == ds.labels);
  bool same = true;
  for (size_t i = 0; i < ds.pixels.size(); ++i)
    same = same && std::abs(ds.pixels[i] - back.pixels[i]) <= 0.5f / 255;
  CHECK(same);
  std::remove(p.c_str());
  fs::remove_all(dir);
}

TEST_CASE("synthetic dataset is balanced and loadable") {
  std::string dir = tmp_path("ut_synth");
  write_synthetic_cifar10(dir, 200, 50, 3);
  Dataset train = import_cifar10_binary(dir, true);
  Dataset test = import_cifar10_binary(dir, false);
  CHECK(train.count() == 200);
  CHECK(test.count() == 50);
  std::vector<int> per_class(10, 0);
  for (long i = 0; i < train.count(); ++i) ++per_class[train.label(i)];
  for (int c = 0; c < 10; ++c) CHECK(per_class[c] == 20);
  for (long i = 0; i < train.sample_len(); ++i) {
    CHECK(train.sample(0)[i] >= 0.0f);
    CHECK(train.sample(0)[i] <= 1.0f);
  }
  fs::remove_all(dir);
}

TEST_CASE("split construction honors the spec") {
  std::string dir = tmp_path("ut_split");
  write_synthetic_cifar10(dir, 600, 100, 5);
  Dataset train = import_cifar10_binary(dir, true);
  Dataset test = import_cifar10_binary(dir, false);
  fs::remove_all(dir);

  SplitSpec spec;
  spec.unlabeled_count = 300;
  spec.labeled_count = 100;
  spec.val_fraction = 0.1;
  std::mt19937_64 rng(1);

  SUBCASE("counts, label stripping, extra validation carve-out") {
    SplitSet s = make_splits(train, test, spec, rng);
    CHECK(s.unlabeled.count() == 300);
    CHECK(s.labeled.count() == 100);
    CHECK(s.val.count() == 10);  // 10% of M2, on top of it
    CHECK(s.test.count() == test.count());
    for (long i = 0; i < s.unlabeled.count(); ++i)
      CHECK(s.unlabeled.label(i) == kUnlabeled);
    for (long i = 0; i < s.labeled.count(); ++i) CHECK(s.labeled.label(i) >= 0);
  }

  SUBCASE("excluded classes never appear in the labeled splits") {
    spec.excluded_classes = {3, 7};
    SplitSet s = make_splits(train, test, spec, rng);
    for (long i = 0; i < s.labeled.count(); ++i) {
      CHECK(s.labeled.label(i) != 3);
      CHECK(s.labeled.label(i) != 7);
    }
    for (long i = 0; i < s.val.count(); ++i) {
      CHECK(s.val.label(i) != 3);
      CHECK(s.val.label(i) != 7);
    }
  }

  SUBCASE("per-class uniform labeled sampling") {
    spec.per_class_uniform = true;
    SplitSet s = make_splits(train, test, spec, rng);
    std::vector<int> per_class(10, 0);
    for (long i = 0; i < s.labeled.count(); ++i) ++per_class[s.labeled.label(i)];
    for (int c = 0; c < 10; ++c) CHECK(per_class[c] == 10);
  }

  SUBCASE("infeasible request throws") {
    spec.unlabeled_count = 550;
    spec.labeled_count = 100;  // disjoint 550 + 100 + val > 600
    CHECK_THROWS_AS(make_splits(train, test, spec, rng), InfeasibleSplit);
  }

  SUBCASE("overlap flag relaxes disjointness") {
    spec.unlabeled_count = 550;
    spec.labeled_count = 100;
    spec.allow_overlap = true;
    SplitSet s = make_splits(train, test, spec, rng);
    CHECK(s.unlabeled.count() == 550);
  }
}

TEST_CASE("minibatches shuffle and drop the remainder") {
  std::mt19937_64 rng(3);
  auto batches = minibatches(103, 32, rng);
  CHECK(batches.size() == 3);
  std::set<long> seen;
  for (const auto& b : batches) {
    CHECK(b.size() == 32);
    for (long i : b) {
      CHECK(i >= 0);
      CHECK(i < 103);
      CHECK(seen.insert(i).second);  // no duplicates across the epoch
    }
  }
  std::mt19937_64 rng2(3);
  CHECK(minibatches(103, 32, rng2) == batches);  // same stream, same epoch
}
