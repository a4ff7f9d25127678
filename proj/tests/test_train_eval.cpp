#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "slscom/checkpoint.hpp"
#include "slscom/eval.hpp"
#include "slscom/rng.hpp"
#include "slscom/ssl_pretrain.hpp"

#include "test_util.hpp"

using namespace slscom;
using testutil::random_tensor;

namespace fs = std::filesystem;

namespace {

std::string tmp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / name;
  fs::create_directories(p);
  return p.string();
}

}  // namespace

TEST_CASE("loss hand values") {
  // InfoNCE, orthogonal pairs at batch size 2: S = I -> 1 - ln(1 + e)
  ag::Tensor s({2, 2});
  s.data[0] = 1;
  s.data[3] = 1;
  CHECK(ag::infonce_from_scores(ag::make_param(s))->value.data[0] ==
        doctest::Approx(-0.3132616875182228).epsilon(1e-9));

  // all-equal scores -> exactly -ln N_b
  ag::Tensor u = ag::Tensor::full({2, 2}, 0.37);
  CHECK(ag::infonce_from_scores(ag::make_param(u))->value.data[0] ==
        doctest::Approx(-std::log(2.0)).epsilon(1e-12));

  // uniform classifier cross entropy = ln 10
  ag::Tensor probs = ag::Tensor::full({4, 10}, 0.1);
  ag::Tensor onehot({4, 10});
  for (int r = 0; r < 4; ++r) onehot.data[r * 10 + r] = 1;
  CHECK(ce_loss(ag::make_param(probs), onehot)->value.data[0] ==
        doctest::Approx(std::log(10.0)).epsilon(1e-9));

  // reconstruction of an identical pair is exactly zero
  std::mt19937_64 rng(1);
  ag::Tensor x = random_tensor({3, 8}, rng);
  Var same = reconstruction_loss(ag::make_param(x), ag::make_param(x));
  CHECK(same->value.data[0] == 0.0);

  // composite pre-training loss: L_pre = -(lambda*L_r + L_c)
  Var lc = ag::constant(ag::Tensor::scalar(-0.4));
  Var lr = ag::constant(ag::Tensor::scalar(-2.0));
  CHECK(pretrain_loss(lc, lr, 0.15)->value.data[0] ==
        doctest::Approx(0.4 + 0.15 * 2.0).epsilon(1e-12));

  // L_app = L_mse + mu * L_ce
  Var mse = ag::constant(ag::Tensor::scalar(1.25));
  Var ce = ag::constant(ag::Tensor::scalar(2.0));
  CHECK(app_loss(mse, ce, 0.5)->value.data[0] == doctest::Approx(2.25));
}

TEST_CASE("mse loss is the batch mean of per-sample squared norms") {
  ag::Tensor x({2, 3}), y({2, 3});
  x.data << 1, 2, 3, 4, 5, 6;
  y.data << 1, 2, 4, 4, 7, 6;  // diffs: (0,0,1) and (0,2,0)
  CHECK(mse_loss(ag::make_param(x), ag::make_param(y))->value.data[0] ==
        doctest::Approx((1.0 + 4.0) / 2).epsilon(1e-12));
  ag::Tensor bad({3, 2});
  CHECK_THROWS_AS(mse_loss(ag::make_param(x), ag::make_param(bad)), BatchMismatch);
}

TEST_CASE("one-hot encoding rejects unlabeled samples") {
  Dataset ds;
  ds.channels = 1;
  ds.height = 1;
  ds.width = 1;
  ds.pixels = {0.1f, 0.2f, 0.3f};
  ds.labels = {2, kUnlabeled, 4};
  ag::Tensor t = one_hot(ds, {0, 2}, 10);
  CHECK(t.data[2] == 1.0);
  CHECK(t.data[14] == 1.0);
  CHECK(t.data.sum() == 2.0);
  CHECK_THROWS_AS(one_hot(ds, {1}, 10), DataError);
}

TEST_CASE("top1 accuracy contract") {
  CHECK(top1_accuracy({1, 2, 3}, {1, 2, 3}) == 1.0);
  CHECK(top1_accuracy({1, 2, 3}, {1, 0, 0}) == doctest::Approx(1.0 / 3));
  CHECK_THROWS_AS(top1_accuracy({}, {}), LengthError);
  CHECK_THROWS_AS(top1_accuracy({1}, {1, 2}), LengthError);
}

TEST_CASE("checkpoint roundtrip restores weights and metadata") {
  std::mt19937_64 rng(2);
  SemanticDecoder module(16, 10, rng);
  std::string path = tmp_dir("ut_ckpt") + "/m.ckpt";
  CheckpointMeta meta{"semantic_decoder", "desk_cnn", 12345u};
  save_checkpoint(path, meta, module);

  auto before = module.parameters();
  std::vector<double> saved;
  for (auto& p : before)
    for (long i = 0; i < p.var->value.size(); ++i) saved.push_back(p.var->value.data[i]);
  for (auto& p : before) p.var->value.data += 1.0;

  CheckpointMeta back = load_checkpoint(path, module);
  CHECK(back.component == "semantic_decoder");
  CHECK(back.preset == "desk_cnn");
  CHECK(back.config_fingerprint == 12345u);
  size_t j = 0;
  for (auto& p : module.parameters())
    for (long i = 0; i < p.var->value.size(); ++i)
      CHECK(p.var->value.data[i] == saved[j++]);

  CHECK(read_checkpoint_meta(path).component == "semantic_decoder");
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/x.ckpt", module), MissingCheckpoint);

  std::mt19937_64 rng2(3);
  SemanticDecoder other(8, 10, rng2);  // wrong shapes
  CHECK_THROWS_AS(load_checkpoint(path, other), CheckpointError);
  fs::remove_all(tmp_dir("ut_ckpt"));
}

TEST_CASE("pipeline forward contract and determinism") {
  ExperimentConfig cfg = ExperimentConfig::desk_preset();
  std::mt19937_64 init1(5), pil1(6), init2(5), pil2(6);
  SlscomPipeline p1(cfg, init1, pil1), p2(cfg, init2, pil2);

  std::mt19937_64 rng(7);
  ag::Tensor imgs = random_tensor({2, 3, 32, 32}, rng, 0.2);
  for (long i = 0; i < imgs.size(); ++i)
    imgs.data[i] = std::min(1.0, std::max(0.0, imgs.data[i] + 0.5));

  std::mt19937_64 c1(11), n1(12), c2(11), n2(12);
  auto o1 = p1.forward(imgs, false, 0.0, c1, n1);
  auto o2 = p2.forward(imgs, false, 0.0, c2, n2);
  CHECK(o1.semantic->value.shape == std::vector<long>{2, 128});
  CHECK(o1.recovered->value.shape == std::vector<long>{2, 128});
  CHECK(o1.probs->value.shape == std::vector<long>{2, 10});
  for (long i = 0; i < o1.probs->value.size(); ++i)
    CHECK(o1.probs->value.data[i] == o2.probs->value.data[i]);
}

TEST_CASE("channel capture and replay reproduce a forward pass") {
  ExperimentConfig cfg = ExperimentConfig::desk_preset();
  std::mt19937_64 init(5), pil(6);
  SlscomPipeline p(cfg, init, pil);
  std::mt19937_64 rng(7);
  ag::Tensor imgs = random_tensor({2, 3, 32, 32}, rng, 0.2);

  std::mt19937_64 c1(11), n1(12);
  SlscomPipeline::ChannelConstants cc;
  auto o1 = p.forward(imgs, false, 0.0, c1, n1, &cc);
  std::mt19937_64 c2(999), n2(999);  // ignored when replaying
  auto o2 = p.forward(imgs, false, 0.0, c2, n2, nullptr, &cc);
  for (long i = 0; i < o1.probs->value.size(); ++i)
    CHECK(o1.probs->value.data[i] == o2.probs->value.data[i]);
}

TEST_CASE("weights checksum tracks parameter changes") {
  std::mt19937_64 rng(8);
  SemanticDecoder module(16, 10, rng);
  std::uint64_t a = weights_checksum(module);
  CHECK(a == weights_checksum(module));
  module.parameters()[0].var->value.data[0] += 1e-12;
  CHECK(a != weights_checksum(module));
}

TEST_CASE("finetune mode preconditions") {
  ExperimentConfig cfg = ExperimentConfig::desk_preset();
  cfg.hyper.epochs_finetune = 1;
  Dataset empty;
  SUBCASE("slscom without pretrained weights") {
    cfg.mode = TrainMode::slscom;
    CHECK_THROWS_AS(finetune_run(empty, empty, cfg, nullptr, tmp_dir("ut_ft"), 1),
                    MissingCheckpoint);
  }
  SUBCASE("tscom without a checkpoint path") {
    cfg.mode = TrainMode::tscom;
    CHECK_THROWS_AS(finetune_run(empty, empty, cfg, nullptr, tmp_dir("ut_ft"), 1),
                    MissingCheckpoint);
  }
  SUBCASE("rscom rejects pretrained weights") {
    cfg.mode = TrainMode::rscom;
    cfg.pretrained_weights = "/some/weights.ckpt";
    CHECK_THROWS_AS(finetune_run(empty, empty, cfg, nullptr, tmp_dir("ut_ft"), 1),
                    ConfigError);
  }
  fs::remove_all(tmp_dir("ut_ft"));
}
