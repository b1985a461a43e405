#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "binlite/train.hpp"
#include "support/synth.hpp"
#include "support/test_util.hpp"

using namespace binlite;
using testutil::random_tensor;
using testutil::SynthSpec;
using testutil::SynthTask;
using testutil::TmpDir;

namespace {

Tensor random_probs(int n, int k, std::uint64_t seed) {
  auto raw = random_tensor<float>({n, k}, seed, 0.05f, 1.0f);
  for (int i = 0; i < n; ++i) {
    float sum = 0;
    for (int j = 0; j < k; ++j) sum += raw.at(i, j);
    for (int j = 0; j < k; ++j) raw.at(i, j) /= sum;
  }
  return raw;
}

// graph that always predicts class 0: zero dense weights, bias favoring 0
ModelGraph always_class0(int k) {
  ModelGraph g = build_preset({ArchKind::scratch_cnn, 0.125, k}, 1);
  auto& dense = g.layers[g.layers.size() - 2];
  REQUIRE(dense.spec.kind == LayerKind::dense);
  auto& w = dense.state.params.at("weights");
  for (std::int64_t i = 0; i < w.numel(); ++i) w[i] = 0.0f;
  auto& b = dense.state.params.at("bias");
  for (std::int64_t i = 0; i < b.numel(); ++i) b[i] = 0.0f;
  b[0] = 2.0f;
  return g;
}

} // namespace

TEST_CASE("cross_entropy hand values") {
  // perfect one-hot prediction
  Tensor perfect({2, 3});
  perfect.at(0, 1) = 1.0f;
  perfect.at(1, 2) = 1.0f;
  CHECK(cross_entropy(perfect, {1, 2}).first == doctest::Approx(0.0f).epsilon(1e-6));

  // uniform over six classes
  Tensor uniform = Tensor::full({4, 6}, 1.0f / 6.0f);
  CHECK(cross_entropy(uniform, {0, 1, 2, 3}).first ==
        doctest::Approx(std::log(6.0)).epsilon(1e-6));

  Tensor p = random_probs(2, 4, 5);
  CHECK_THROWS_AS(cross_entropy(p, {0, 4}), LabelError);
  CHECK_THROWS_AS(cross_entropy(p, {0, -1}), LabelError);
}

TEST_CASE("cross_entropy matches an f64 direct-formula oracle") {
  Tensor probs = random_probs(4, 6, 6);
  const std::vector<int> labels = {2, 0, 5, 3};
  const auto [loss, grad] = cross_entropy(probs, labels);
  double want = 0;
  for (int i = 0; i < 4; ++i)
    want -= std::log(static_cast<double>(probs.at(i, labels[static_cast<std::size_t>(i)])));
  want /= 4;
  CHECK(loss == doctest::Approx(want).epsilon(1e-6));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 6; ++j) {
      const double expect =
          j == labels[static_cast<std::size_t>(i)]
              ? -1.0 / (4.0 * static_cast<double>(probs.at(i, j)))
              : 0.0;
      CHECK(grad.at(i, j) == doctest::Approx(expect).epsilon(1e-6));
    }
}

TEST_CASE("fused softmax+CE gradient equals softmax backward of the CE gradient") {
  LayerSpec spec;
  spec.kind = LayerKind::softmax;
  LayerState st;
  auto logits = random_tensor<float>({5, 6}, 7, -3.0f, 3.0f);
  Tensor probs = forward(spec, st, logits, Mode::train, nullptr);
  const std::vector<int> labels = {0, 3, 5, 2, 2};
  auto [loss, dprobs] = cross_entropy(probs, labels);
  (void)loss;
  auto composed = backward(spec, st, dprobs);
  Tensor fused = cross_entropy_softmax_grad(probs, labels);
  CHECK(testutil::max_abs_diff(composed.input_grad, fused) < 1e-6);
}

TEST_CASE("sgd_momentum_step hand arithmetic") {
  Tensor w = Tensor::full({1}, 1.0f);
  Tensor g = Tensor::full({1}, 1.0f);
  Tensor v({1});
  sgd_momentum_step(w, g, v, 0.001f, 0.9f);
  CHECK(v[0] == doctest::Approx(-0.001f));
  CHECK(w[0] == doctest::Approx(0.999f));
  sgd_momentum_step(w, g, v, 0.001f, 0.9f);
  CHECK(v[0] == doctest::Approx(-0.0019f));
  CHECK(w[0] == doctest::Approx(0.9971f));

  // zero momentum reduces to vanilla SGD
  Tensor w2 = Tensor::full({3}, 2.0f);
  auto g2 = random_tensor<float>({3}, 8);
  Tensor v2({3});
  sgd_momentum_step(w2, g2, v2, 0.5f, 0.0f);
  for (int i = 0; i < 3; ++i) CHECK(w2[i] == doctest::Approx(2.0f - 0.5f * g2[i]));

  Tensor bad({2});
  CHECK_THROWS_AS(sgd_momentum_step(w2, bad, v2, 0.1f, 0.9f), ShapeError);
}

TEST_CASE("early stopping semantics (patience 3)") {
  // spec sequence: stop after epoch 5, best at epoch 2
  EarlyStopper s(Monitor::val_accuracy, 3);
  const double seq[] = {0.50, 0.60, 0.59, 0.58, 0.57};
  bool stopped = false;
  int stop_epoch = 0;
  for (int i = 0; i < 5; ++i) {
    s.update(seq[i]);
    if (s.should_stop()) {
      stopped = true;
      stop_epoch = i + 1;
      break;
    }
  }
  CHECK(stopped);
  CHECK(stop_epoch == 5);
  CHECK(s.best_epoch() == 2);

  // strictly improving sequence never stops
  EarlyStopper s2(Monitor::val_accuracy, 3);
  for (int i = 0; i < 10; ++i) {
    s2.update(0.1 * i);
    CHECK_FALSE(s2.should_stop());
  }
  CHECK(s2.best_epoch() == 10);

  // ties are not improvements and keep the earlier best
  EarlyStopper s3(Monitor::val_accuracy, 3);
  for (int i = 0; i < 4; ++i) s3.update(0.5);
  CHECK(s3.best_epoch() == 1);
  CHECK(s3.should_stop());

  // val_loss monitors downward
  EarlyStopper s4(Monitor::val_loss, 2);
  s4.update(1.0);
  s4.update(0.8);
  s4.update(0.9);
  s4.update(0.85);
  CHECK(s4.best_epoch() == 2);
  CHECK(s4.should_stop());
}

TEST_CASE("early stopping never runs past best_epoch + patience (property)") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const int patience = 1 + static_cast<int>(rng.uniform_int(4));
    EarlyStopper s(Monitor::val_accuracy, patience);
    int epoch = 0;
    while (epoch < 50) {
      ++epoch;
      s.update(rng.u01());
      if (s.should_stop()) break;
    }
    if (s.should_stop()) CHECK(epoch == s.best_epoch() + patience);
  }
}

TEST_CASE("fit: memorization, determinism, checkpoint restore, frozen graphs") {
  TmpDir dir("fit");
  SynthSpec spec;
  spec.task = SynthTask::colors;
  spec.per_class = 10; // 60 images over 6 classes
  spec.seed = 77;
  write_synth_dataset(dir.file("data"), spec);
  auto manifest = split_dataset(scan_directory(dir.file("data")), {0.8, 0.1, 0.1}, 5);

  TrainConfig cfg;
  cfg.lr = 0.001f;
  cfg.momentum = 0.9f;
  cfg.batch_size = 16;
  cfg.max_epochs = 10;
  cfg.patience = 10; // let it run; this test watches the loss curve
  cfg.seed = 42;
  cfg.checkpoint_path = dir.file("best.blt");
  cfg.progress = false;

  ModelGraph g = build_preset({ArchKind::scratch_cnn, 0.25, 6}, 42);
  g.class_names = manifest.class_names;
  TrainReport r1 = fit(g, manifest, cfg);
  REQUIRE(static_cast<int>(r1.epochs.size()) <= cfg.max_epochs);
  CHECK(r1.epochs.back().train_loss < r1.epochs.front().train_loss);

  // the saved best checkpoint reproduces the recorded best val metric
  ModelGraph best = load_model(dir.file("best.blt"));
  EvalResult val = evaluate(best, manifest, Split::val);
  const auto& best_rec = r1.epochs[static_cast<std::size_t>(r1.best_epoch - 1)];
  CHECK(val.accuracy == doctest::Approx(best_rec.val_acc).epsilon(1e-6));
  CHECK(val.loss == doctest::Approx(best_rec.val_loss).epsilon(1e-6));

  // determinism: same config + seed -> bitwise-identical loss sequence
  ModelGraph g2 = build_preset({ArchKind::scratch_cnn, 0.25, 6}, 42);
  g2.class_names = manifest.class_names;
  TrainConfig cfg2 = cfg;
  cfg2.checkpoint_path = dir.file("best2.blt");
  TrainReport r2 = fit(g2, manifest, cfg2);
  REQUIRE(r1.epochs.size() == r2.epochs.size());
  for (std::size_t i = 0; i < r1.epochs.size(); ++i) {
    CHECK(r1.epochs[i].train_loss == r2.epochs[i].train_loss);
    CHECK(r1.epochs[i].val_loss == r2.epochs[i].val_loss);
  }

  // freeze(all): one training epoch changes no parameter bitwise
  ModelGraph frozen = build_preset({ArchKind::scratch_cnn, 0.125, 6}, 43);
  frozen.class_names = manifest.class_names;
  freeze(frozen, FreezeSel::all);
  ModelGraph before = frozen;
  TrainConfig cf = cfg;
  cf.max_epochs = 1;
  cf.checkpoint_path = dir.file("frozen.blt");
  fit(frozen, manifest, cf);
  for (std::size_t i = 0; i < before.layers.size(); ++i)
    for (const auto& [name, t] : before.layers[i].state.params)
      CHECK(testutil::bitwise_equal(t, frozen.layers[i].state.params.at(name)));
}

TEST_CASE("fit aborts with a numeric error and partial report on NaN loss") {
  TmpDir dir("nan");
  SynthSpec spec;
  spec.task = SynthTask::colors;
  spec.per_class = 4;
  spec.seed = 78;
  write_synth_dataset(dir.file("data"), spec);
  auto manifest = split_dataset(scan_directory(dir.file("data")), {0.5, 0.5, 0.0}, 5);

  ModelGraph g = build_preset({ArchKind::scratch_cnn, 0.125, 6}, 44);
  g.class_names = manifest.class_names;
  TrainConfig cfg;
  cfg.lr = 3e38f; // drives the un-normalized final dense layer to overflow
  cfg.max_epochs = 6;
  cfg.batch_size = 8;
  cfg.seed = 1;
  cfg.checkpoint_path = dir.file("nan.blt");
  cfg.progress = false;
  CHECK_THROWS_AS(fit(g, manifest, cfg), TrainAborted);
}

TEST_CASE("fit validates its inputs") {
  TmpDir dir("fitval");
  SynthSpec spec;
  spec.task = SynthTask::colors;
  spec.per_class = 2;
  write_synth_dataset(dir.file("data"), spec);
  auto manifest = split_dataset(scan_directory(dir.file("data")), {1.0, 0.0, 0.0}, 5);
  ModelGraph g = build_preset({ArchKind::scratch_cnn, 0.125, 6}, 45);
  g.class_names = manifest.class_names;
  TrainConfig cfg;
  cfg.checkpoint_path = dir.file("x.blt");
  cfg.progress = false;
  CHECK_THROWS_AS(fit(g, manifest, cfg), ConfigError); // empty val split
}

TEST_CASE("evaluate: always-predicts-class-0 model on a balanced set") {
  TmpDir dir("eval");
  SynthSpec spec;
  spec.task = SynthTask::colors;
  spec.per_class = 3;
  spec.seed = 79;
  write_synth_dataset(dir.file("data"), spec);
  auto manifest = split_dataset(scan_directory(dir.file("data")), {0.0, 1.0, 0.0}, 5);

  ModelGraph g = always_class0(6);
  g.class_names = manifest.class_names;
  EvalResult res = evaluate(g, manifest, Split::val);
  CHECK(res.accuracy == doctest::Approx(1.0 / 6).epsilon(1e-9));
  // confusion rows sum to the per-class counts; only column 0 is populated
  for (int i = 0; i < 6; ++i) {
    std::int64_t row = 0;
    for (int j = 0; j < 6; ++j) row += res.confusion[static_cast<std::size_t>(i) * 6 + j];
    CHECK(row == 3);
    CHECK(res.confusion[static_cast<std::size_t>(i) * 6] == 3);
  }
  CHECK_THROWS_AS(evaluate(g, manifest, Split::test), ConfigError);
}

TEST_CASE("evaluate accuracy matches an independent per-sample recount") {
  TmpDir dir("recount");
  SynthSpec spec;
  spec.task = SynthTask::colors;
  spec.per_class = 4;
  spec.seed = 80;
  write_synth_dataset(dir.file("data"), spec);
  auto manifest = split_dataset(scan_directory(dir.file("data")), {0.0, 1.0, 0.0}, 5);

  ModelGraph g = build_preset({ArchKind::scratch_cnn, 0.125, 6}, 46);
  g.class_names = manifest.class_names;
  EvalResult res = evaluate(g, manifest, Split::val);

  std::int64_t correct = 0, total = 0;
  for (const auto& e : manifest.entries) {
    if (e.split != Split::val) continue;
    Tensor img = preprocess(load_image(manifest.root + "/" + e.rel_path));
    Tensor batch({1, kImageSide, kImageSide, 3});
    std::copy(img.data(), img.data() + img.numel(), batch.data());
    Tensor probs = predict(g, batch);
    int arg = 0;
    for (int j = 1; j < 6; ++j)
      if (probs.at(0, j) > probs.at(0, arg)) arg = j;
    correct += arg == e.class_index;
    ++total;
  }
  CHECK(res.accuracy ==
        doctest::Approx(static_cast<double>(correct) / static_cast<double>(total)).epsilon(1e-9));
}
