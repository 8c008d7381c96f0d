#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "portanet/random.hpp"
#include "portanet/tensor.hpp"

namespace portanet {

/// Normalized images (N×C×H×W) and their class ids.
struct Dataset {
  Tensor images;
  std::vector<int> labels;
  std::size_t class_count = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t sample_size() const { return images.count() / labels.size(); }
  std::span<const float> sample(std::size_t i) const {
    return images.values().subspan(i * sample_size(), sample_size());
  }
};

/// Reads an IDX image file (magic 0x00000803) and label file (0x00000801).
/// Pixels are scaled by 1/256; the result is N×1×rows×cols.
Dataset load_mnist(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

struct CifarData {
  Dataset dataset;
  Tensor mean;  // 3×32×32 image subtracted from every sample
};

/// Reads CIFAR-10 binary batches: 3073-byte records of one label byte and
/// 1024 red, 1024 green, 1024 blue pixel bytes. Pixels are scaled by 1/256,
/// then `mean` (or, when null, the mean of these files) is subtracted.
CifarData load_cifar10(std::span<const std::filesystem::path> batch_paths, const Tensor* mean = nullptr);

/// Per-pixel average over all samples, shaped like one sample.
Tensor mean_image(const Dataset& data);
void subtract_mean(Dataset& data, const Tensor& mean);

/// Copy of samples [begin, begin + count).
Dataset slice(const Dataset& data, std::size_t begin, std::size_t count);

struct Batch {
  Tensor images;
  std::vector<int> labels;
};

/// Walks a dataset in batches. With a seed, each epoch visits the samples in
/// a fresh permutation drawn from that seed; without one, in stored order.
/// A batch that runs past the end of an epoch continues into the next.
class BatchIterator {
 public:
  BatchIterator(const Dataset& data, std::size_t batch, std::optional<std::uint64_t> seed);

  Batch next();
  void next_into(std::span<float> images, std::span<int> labels);

  std::size_t batch() const noexcept { return batch_; }
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  void start_epoch();

  const Dataset* data_;
  std::size_t batch_;
  std::optional<Rng> rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::size_t epoch_ = 0;
};

}  // namespace portanet
