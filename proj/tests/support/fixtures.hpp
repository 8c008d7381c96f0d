#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace portanet::testing {

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

/// IDX image file: magic 0x00000803, count, rows, cols (big-endian), pixels.
std::vector<std::uint8_t> idx_images(std::uint32_t count, std::uint32_t rows, std::uint32_t cols,
                                     std::span<const std::uint8_t> pixels);
/// IDX label file: magic 0x00000801, count (big-endian), labels.
std::vector<std::uint8_t> idx_labels(std::span<const std::uint8_t> labels);

/// CIFAR-10 binary records: per sample one label byte and 3072 pixel bytes.
std::vector<std::uint8_t> cifar_records(std::span<const std::uint8_t> labels, std::span<const std::uint8_t> pixels);

/// Writes data_batch_1.bin and test_batch.bin with class-dependent images:
/// each class has its own colour balance and stripe orientation, plus noise.
void write_synthetic_cifar(const std::filesystem::path& dir, std::size_t train_count, std::size_t test_count,
                           std::uint64_t seed);

}  // namespace portanet::testing
