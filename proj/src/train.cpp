#include "binlite/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>

#include <json.hpp>

namespace binlite {

std::string report_json(const TrainReport& r) {
  nlohmann::json j;
  j["stop_reason"] = r.stop_reason == StopReason::early_stopped ? "early_stopped" : "max_epochs";
  j["best_epoch"] = r.best_epoch;
  j["best_checkpoint"] = r.best_checkpoint;
  j["epochs"] = nlohmann::json::array();
  for (const auto& e : r.epochs) {
    j["epochs"].push_back({{"train_loss", e.train_loss},
                           {"train_acc", e.train_acc},
                           {"val_loss", e.val_loss},
                           {"val_acc", e.val_acc},
                           {"wall_ms", e.wall_ms}});
  }
  return j.dump(2);
}

std::pair<float, Tensor> cross_entropy(const Tensor& probs, const std::vector<int>& labels) {
  if (probs.rank() != 2) throw ShapeError("cross_entropy: probs must be [n,k]");
  const int n = probs.extent(0), k = probs.extent(1);
  if (static_cast<int>(labels.size()) != n)
    throw ShapeError("cross_entropy: one label per row expected");
  Tensor grad({n, k});
  double loss = 0.0;
  constexpr float kClamp = 1e-12f;
  for (int i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= k)
      throw LabelError("cross_entropy: label " + std::to_string(y) + " out of range [0," +
                       std::to_string(k) + ")");
    const float p = std::max(probs.at(i, y), kClamp);
    loss -= std::log(static_cast<double>(p));
    grad.at(i, y) = -1.0f / (static_cast<float>(n) * p);
  }
  return {static_cast<float>(loss / n), std::move(grad)};
}

Tensor cross_entropy_softmax_grad(const Tensor& probs, const std::vector<int>& labels) {
  const int n = probs.extent(0), k = probs.extent(1);
  Tensor grad({n, k});
  const float inv_n = 1.0f / static_cast<float>(n);
  for (int i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= k) throw LabelError("label out of range");
    for (int j = 0; j < k; ++j)
      grad.at(i, j) = (probs.at(i, j) - (j == y ? 1.0f : 0.0f)) * inv_n;
  }
  return grad;
}

void sgd_momentum_step(Tensor& w, const Tensor& g, Tensor& v, float lr, float momentum) {
  if (!w.same_shape(g) || !w.same_shape(v))
    throw ShapeError("sgd_momentum_step: parameter/gradient/velocity shapes disagree");
  const std::int64_t n = w.numel();
  for (std::int64_t i = 0; i < n; ++i) {
    v[i] = momentum * v[i] - lr * g[i];
    w[i] += v[i];
  }
}

bool EarlyStopper::update(double value) {
  ++epoch_;
  const bool better =
      !has_best_ || (monitor_ == Monitor::val_loss ? value < best_value_ : value > best_value_);
  if (better) {
    has_best_ = true;
    best_value_ = value;
    best_epoch_ = epoch_;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

int mismatch_free_argmax(const float* row, int k) {
  int best = 0;
  for (int j = 1; j < k; ++j)
    if (row[j] > row[best]) best = j;
  return best;
}

// Index of the lowest layer whose parameters can change; backward passes
// stop there and caches below it are never recorded.
int first_trainable_layer(const ModelGraph& g) {
  for (std::size_t i = 0; i < g.layers.size(); ++i)
    if (g.layers[i].spec.trainable && layer_param_count(g.layers[i].spec) > 0)
      return static_cast<int>(i);
  return static_cast<int>(g.layers.size());
}

void add_into(Tensor& acc, const Tensor& g) {
  if (acc.empty()) {
    acc = g;
    return;
  }
  const std::int64_t n = acc.numel();
  for (std::int64_t i = 0; i < n; ++i) acc[i] += g[i];
}

} // namespace

TrainReport fit(ModelGraph& g, const DatasetManifest& data, const TrainConfig& cfg) {
  if (g.layers.empty()) throw ConfigError("fit: graph is not built");
  if (data.split_size(Split::train) == 0) throw ConfigError("fit: train split is empty");
  if (data.split_size(Split::val) == 0) throw ConfigError("fit: val split is empty");
  if (static_cast<int>(g.class_names.size()) != static_cast<int>(data.class_names.size()))
    throw ConfigError("fit: model and dataset class counts differ");

  std::string ckpt = cfg.checkpoint_path;
  if (ckpt.empty())
    ckpt = (std::filesystem::temp_directory_path() /
            ("binlite_ckpt_" + std::to_string(cfg.seed) + ".blt"))
               .string();

  const int L = static_cast<int>(g.layers.size());
  const int cache_from = first_trainable_layer(g);
  if (g.layers.back().spec.kind != LayerKind::softmax)
    throw ConfigError("fit: final layer must be softmax");

  Rng dropout_rng(mix_seed(cfg.seed, 0xd40ULL, 0));
  std::map<std::pair<int, std::string>, Tensor> velocity;

  TrainReport report;
  report.best_checkpoint = ckpt;
  EarlyStopper stopper(cfg.monitor, cfg.patience);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const double t0 = now_ms();
    BatchStream stream(data, Split::train,
                       {cfg.batch_size, cfg.seed, epoch, cfg.augment, true});
    double loss_sum = 0.0;
    std::int64_t seen = 0, correct = 0;
    Batch batch;
    while (stream.next(batch)) {
      const int n = batch.images.extent(0);
      Tensor probs = run_forward(g, batch.images, Mode::train, &dropout_rng, cache_from);
      const float batch_loss = cross_entropy(probs, batch.labels).first;
      if (!std::isfinite(batch_loss)) {
        report.stop_reason = StopReason::max_epochs;
        throw TrainAborted("fit: non-finite loss at epoch " + std::to_string(epoch), report);
      }
      loss_sum += static_cast<double>(batch_loss) * n;
      for (int i = 0; i < n; ++i)
        correct += mismatch_free_argmax(probs.data() + static_cast<std::int64_t>(i) * probs.extent(1),
                                        probs.extent(1)) == batch.labels[static_cast<std::size_t>(i)];
      seen += n;

      if (cache_from >= L) continue; // everything frozen: evaluate-only pass

      // fused softmax+CE gradient enters below the softmax layer
      Tensor dlogits = cross_entropy_softmax_grad(probs, batch.labels);
      std::vector<Tensor> gout(static_cast<std::size_t>(L));
      gout[static_cast<std::size_t>(L - 2)] = std::move(dlogits);
      for (int i = L - 2; i >= cache_from; --i) {
        Tensor upstream = std::move(gout[static_cast<std::size_t>(i)]);
        auto& u = g.layers[static_cast<std::size_t>(i)];
        if (u.spec.kind == LayerKind::residual_add) {
          add_into(gout[static_cast<std::size_t>(u.spec.skip_from)], upstream);
          if (i - 1 >= cache_from) add_into(gout[static_cast<std::size_t>(i - 1)], upstream);
          continue;
        }
        Gradients<float> grads = backward(u.spec, u.state, upstream, i > cache_from);
        for (auto& [name, pg] : grads.param_grads) {
          auto& vel = velocity[{i, name}];
          auto& param = u.state.params.at(name);
          if (vel.empty()) vel = Tensor(param.shape());
          sgd_momentum_step(param, pg, vel, cfg.lr, cfg.momentum);
        }
        if (i - 1 >= cache_from)
          add_into(gout[static_cast<std::size_t>(i - 1)], grads.input_grad);
      }
    }

    EvalResult val = evaluate(g, data, Split::val);
    EpochRecord rec;
    rec.train_loss = loss_sum / static_cast<double>(seen);
    rec.train_acc = static_cast<double>(correct) / static_cast<double>(seen);
    rec.val_loss = val.loss;
    rec.val_acc = val.accuracy;
    rec.wall_ms = now_ms() - t0;
    report.epochs.push_back(rec);

    if (cfg.progress)
      std::printf("epoch %d/%d  train_loss %.4f  train_acc %.4f  val_loss %.4f  val_acc %.4f  (%.0f ms)\n",
                  epoch, cfg.max_epochs, rec.train_loss, rec.train_acc, rec.val_loss, rec.val_acc,
                  rec.wall_ms);

    const double monitored = cfg.monitor == Monitor::val_loss ? rec.val_loss : rec.val_acc;
    if (stopper.update(monitored)) {
      report.best_epoch = stopper.best_epoch();
      save_model(g, ckpt);
    }
    if (stopper.should_stop()) {
      report.stop_reason = StopReason::early_stopped;
      break;
    }
    if (epoch == cfg.max_epochs) report.stop_reason = StopReason::max_epochs;
  }

  g = load_model(ckpt); // restore the best checkpoint
  return report;
}

EvalResult evaluate(const ModelGraph& g, const DatasetManifest& data, Split split) {
  if (data.split_size(split) == 0)
    throw ConfigError(std::string("evaluate: split '") + split_name(split) + "' is empty");
  const int k = static_cast<int>(g.class_names.size());
  EvalResult out;
  out.k = k;
  out.confusion.assign(static_cast<std::size_t>(k) * k, 0);

  BatchStream stream(data, split, {32, 0, 0, std::nullopt, false});
  Batch batch;
  double loss_sum = 0.0;
  std::int64_t seen = 0, correct = 0;
  while (stream.next(batch)) {
    const int n = batch.images.extent(0);
    Tensor probs = predict(g, batch.images);
    const float batch_loss = cross_entropy(probs, batch.labels).first;
    loss_sum += static_cast<double>(batch_loss) * n;
    for (int i = 0; i < n; ++i) {
      const int pred =
          mismatch_free_argmax(probs.data() + static_cast<std::int64_t>(i) * k, k);
      const int truth = batch.labels[static_cast<std::size_t>(i)];
      ++out.confusion[static_cast<std::size_t>(truth) * k + pred];
      correct += pred == truth;
    }
    seen += n;
  }
  out.loss = loss_sum / static_cast<double>(seen);
  out.accuracy = static_cast<double>(correct) / static_cast<double>(seen);
  return out;
}

} // namespace binlite
