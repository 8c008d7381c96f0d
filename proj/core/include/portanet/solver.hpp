#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "portanet/blob.hpp"
#include "portanet/data.hpp"
#include "portanet/net.hpp"

namespace portanet {

enum class LrPolicy { fixed, inv };

/// Hyperparameters of the `[solver]` section.
struct SolverSpec {
  float base_lr = 0.01f;
  LrPolicy lr_policy = LrPolicy::fixed;
  float gamma = 0.0f;
  float power = 0.0f;
  float momentum = 0.0f;
  float weight_decay = 0.0f;
  std::size_t max_iter = 0;
  std::size_t test_interval = 0;
  std::size_t test_iter = 0;
  std::size_t snapshot_interval = 0;
  std::size_t batch_size = 64;
  std::size_t test_batch_size = 100;
  std::uint64_t seed = 1;

  static SolverSpec parse(std::string_view text);
  static SolverSpec from_file(const std::filesystem::path& path);
  /// Throws ConfigError if any field is out of range.
  void validate() const;
};

/// base_lr for `fixed`; base_lr·(1 + gamma·iter)^(−power) for `inv`.
float learning_rate(const SolverSpec& spec, std::size_t iter);

struct SolverState {
  std::size_t iter = 0;
  std::vector<Tensor> history;  // momentum buffer per learnable blob
};

/// One SGD-with-momentum update over already populated gradients:
///   g = diff + weight_decay·data;  v = momentum·v + lr(iter)·g;  data −= v;  iter += 1.
void sgd_step(SolverState& state, const SolverSpec& spec, std::span<Blob* const> learnables);

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
  std::size_t samples = 0;
};

/// Forward passes over `batches` consecutive batches from the start of `data`
/// (0 = the whole set; a final partial batch is run at its own size). The
/// net is left at batch size `batch`.
Evaluation evaluate(Net& net, const Dataset& data, std::size_t batch, std::size_t batches = 0);

struct MetricRecord {
  std::size_t iter = 0;
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Drives training of one net: batching, forward/backward, updates, periodic
/// evaluation and snapshots.
class Solver {
 public:
  Solver(SolverSpec spec, Net& net, const Dataset& train, const Dataset* test = nullptr);

  /// One iteration on the next training batch; returns its loss.
  float step();
  /// Steps until `iter == until` (or max_iter when omitted), evaluating every
  /// test_interval iterations and at the end.
  void run(std::optional<std::size_t> until = std::nullopt);
  /// test_iter batches of test_batch_size from the test set.
  MetricRecord test();

  const SolverState& state() const noexcept { return state_; }
  const SolverSpec& spec() const noexcept { return spec_; }
  const std::vector<float>& train_losses() const noexcept { return train_losses_; }
  const std::vector<MetricRecord>& test_log() const noexcept { return test_log_; }

  /// Called after every step with the batch loss and accuracy.
  std::function<void(const MetricRecord&)> on_step;
  std::function<void(const MetricRecord&)> on_test;
  std::function<void(std::size_t iter)> on_snapshot;

 private:
  SolverSpec spec_;
  Net& net_;
  const Dataset& train_;
  const Dataset* test_;
  BatchIterator batches_;
  SolverState state_;
  std::vector<float> images_;
  std::vector<int> labels_;
  std::vector<float> train_losses_;
  std::vector<MetricRecord> test_log_;
};

struct TrainResult {
  SolverState state;
  std::vector<float> train_losses;
  std::vector<MetricRecord> test_log;
};

/// Runs a fresh Solver for max_iter iterations.
TrainResult train(Net& net, const SolverSpec& spec, const Dataset& train_set, const Dataset* test_set = nullptr);

}  // namespace portanet
