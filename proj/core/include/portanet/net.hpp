#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "portanet/blob.hpp"
#include "portanet/layer.hpp"

namespace portanet {

/// Ordered chain of layer specs, parsed from `[layer]` sections.
struct NetSpec {
  std::vector<LayerSpec> layers;

  static NetSpec parse(std::string_view text);
  static NetSpec from_file(const std::filesystem::path& path);
};

enum class Pass { forward, backward };

/// Layers wired over a registry of named blobs.
///
/// The first layer must be an Input layer producing the data and label blobs.
/// Blobs are created on first mention as a top; a top may repeat its bottom's
/// name only for layers that run in place.
class Net {
 public:
  using Observer = std::function<void(const Layer&, Pass)>;

  /// Allocates every blob for `batch` samples and initializes learnable blobs
  /// from `seed`.
  Net(const NetSpec& spec, std::size_t batch, std::uint64_t seed);

  std::size_t batch() const noexcept { return batch_; }
  /// Re-infers every shape for a new batch size. Learnable blobs are kept.
  void reshape(std::size_t batch);
  Shape sample_shape() const;

  /// Copies one batch of samples and labels into the input blobs.
  void set_input(std::span<const float> images, std::span<const int> labels);

  /// Runs every layer's forward pass in order; returns Σ loss_weight·loss.
  float forward();
  /// Runs every layer's backward pass in reverse order. Parameter gradients
  /// accumulate, so call zero_param_diffs() first when starting a new step.
  void backward();

  void forward_layer(std::size_t i);
  void backward_layer(std::size_t i);

  std::size_t num_layers() const noexcept { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_.at(i); }
  const Layer& layer(std::size_t i) const { return *layers_.at(i); }

  /// Learnable blobs in layer order (weights before bias).
  std::vector<Blob*> learnables();
  void zero_param_diffs();

  bool has_blob(std::string_view name) const;
  Blob& blob(std::string_view name);
  const Blob& blob(std::string_view name) const;

  /// Value of the first Accuracy layer after the last forward pass.
  std::optional<float> accuracy() const;
  float loss() const noexcept { return loss_; }

  /// Called before each layer pass; used for timing and call-order checks.
  void set_observer(Observer observer) { observer_ = std::move(observer); }

 private:
  Blob& blob_or_create(const std::string& name);

  std::vector<std::unique_ptr<Layer>> layers_;
  std::map<std::string, std::unique_ptr<Blob>, std::less<>> blobs_;
  std::vector<std::vector<Blob*>> bottoms_;
  std::vector<std::vector<Blob*>> tops_;
  std::vector<std::vector<bool>> propagate_down_;
  InputLayer* input_ = nullptr;
  std::optional<std::size_t> accuracy_layer_;
  std::size_t batch_ = 0;
  float loss_ = 0.0f;
  Observer observer_;
};

inline Net net_build(const NetSpec& spec, std::size_t batch, std::uint64_t seed) { return Net(spec, batch, seed); }

}  // namespace portanet
