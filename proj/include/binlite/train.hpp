#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "binlite/data.hpp"
#include "binlite/error.hpp"
#include "binlite/model.hpp"

namespace binlite {

enum class Monitor : std::uint8_t { val_loss = 0, val_accuracy = 1 };

struct TrainConfig {
  float lr = 0.001f;
  float momentum = 0.9f;
  int batch_size = 32;
  int max_epochs = 1;
  int patience = 3;
  std::uint64_t seed = 0;
  Monitor monitor = Monitor::val_accuracy;
  AugmentConfig augment;       // train split only
  std::string checkpoint_path; // best model file (temp path when empty)
  bool progress = true;        // per-epoch line on stdout
};

struct EpochRecord {
  double train_loss = 0, train_acc = 0;
  double val_loss = 0, val_acc = 0;
  double wall_ms = 0;
};

enum class StopReason : std::uint8_t { early_stopped = 0, max_epochs = 1 };

struct TrainReport {
  std::vector<EpochRecord> epochs;
  StopReason stop_reason = StopReason::max_epochs;
  int best_epoch = 0; // 1-based
  std::string best_checkpoint;
};

std::string report_json(const TrainReport& r);

// Categorical cross-entropy over softmax outputs. Returns the mean loss and
// d loss / d probs (probabilities clamped to >= 1e-12).
std::pair<float, Tensor> cross_entropy(const Tensor& probs, const std::vector<int>& labels);

// Fused softmax+CE gradient w.r.t. the logits: (probs - onehot) / n.
Tensor cross_entropy_softmax_grad(const Tensor& probs, const std::vector<int>& labels);

// Classical momentum: v <- momentum*v - lr*g; w <- w + v.
void sgd_momentum_step(Tensor& w, const Tensor& g, Tensor& v, float lr, float momentum);

// Patience logic: an epoch improves only when strictly better than the best
// so far (ties keep the earlier epoch); stop after `patience` consecutive
// non-improving epochs.
class EarlyStopper {
public:
  EarlyStopper(Monitor monitor, int patience) : monitor_(monitor), patience_(patience) {}

  // Feed one epoch's monitored value; returns true when it set a new best.
  bool update(double value);
  bool should_stop() const { return since_best_ >= patience_; }
  int best_epoch() const { return best_epoch_; }
  double best_value() const { return best_value_; }
  int epochs_seen() const { return epoch_; }

private:
  Monitor monitor_;
  int patience_;
  int epoch_ = 0;
  int best_epoch_ = 0;
  int since_best_ = 0;
  double best_value_ = 0;
  bool has_best_ = false;
};

// Thrown on a non-finite loss; carries the epochs completed so far.
struct TrainAborted : NumericError {
  TrainReport partial;
  TrainAborted(const std::string& msg, TrainReport r) : NumericError(msg), partial(std::move(r)) {}
};

// Full training loop: per epoch a train pass (train-mode forward, backward,
// SGD step on trainable parameters only) then a val evaluation, early
// stopping on the monitored metric, best checkpoint saved and restored into
// the graph at the end.
TrainReport fit(ModelGraph& g, const DatasetManifest& data, const TrainConfig& cfg);

struct EvalResult {
  double loss = 0;
  double accuracy = 0;
  std::vector<std::int64_t> confusion; // k*k row-major [true][predicted]
  int k = 0;
};

EvalResult evaluate(const ModelGraph& g, const DatasetManifest& data, Split split);

} // namespace binlite
