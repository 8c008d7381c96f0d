#include "portanet/data.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <numeric>
#include <string>

#include "portanet/error.hpp"

namespace portanet {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
constexpr std::size_t kCifarSide = 32;
constexpr std::size_t kCifarPixels = 3 * kCifarSide * kCifarSide;
constexpr std::size_t kCifarRecord = 1 + kCifarPixels;
constexpr float kPixelScale = 1.0f / 256.0f;

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t big_endian_u32(const std::vector<unsigned char>& bytes, std::size_t offset) {
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

}  // namespace

Dataset load_mnist(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const auto images = read_file(images_path);
  const auto labels = read_file(labels_path);
  if (images.size() < 16) throw FormatError(images_path.string() + ": truncated IDX header");
  if (labels.size() < 8) throw FormatError(labels_path.string() + ": truncated IDX header");
  if (big_endian_u32(images, 0) != kIdxImagesMagic) throw FormatError(images_path.string() + ": bad IDX image magic");
  if (big_endian_u32(labels, 0) != kIdxLabelsMagic) throw FormatError(labels_path.string() + ": bad IDX label magic");

  const std::size_t count = big_endian_u32(images, 4);
  const std::size_t rows = big_endian_u32(images, 8);
  const std::size_t cols = big_endian_u32(images, 12);
  const std::size_t label_count = big_endian_u32(labels, 4);
  if (count != label_count) {
    throw FormatError("MNIST image count " + std::to_string(count) + " does not match label count " +
                      std::to_string(label_count));
  }
  if (count == 0 || rows == 0 || cols == 0) throw FormatError(images_path.string() + ": empty image set");
  const std::size_t pixels = rows * cols;
  if (images.size() != 16 + count * pixels) throw FormatError(images_path.string() + ": payload size mismatch");
  if (labels.size() != 8 + count) throw FormatError(labels_path.string() + ": payload size mismatch");

  Dataset ds;
  ds.class_count = 10;
  ds.images = Tensor(Shape{count, 1, rows, cols});
  float* out = ds.images.data();
  for (std::size_t i = 0; i < count * pixels; ++i) out[i] = static_cast<float>(images[16 + i]) * kPixelScale;
  ds.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (labels[8 + i] > 9) throw FormatError(labels_path.string() + ": label byte > 9");
    ds.labels[i] = labels[8 + i];
  }
  return ds;
}

CifarData load_cifar10(std::span<const std::filesystem::path> batch_paths, const Tensor* mean) {
  std::vector<unsigned char> records;
  for (const auto& path : batch_paths) {
    const auto bytes = read_file(path);
    if (bytes.empty() || bytes.size() % kCifarRecord != 0) {
      throw FormatError(path.string() + ": size " + std::to_string(bytes.size()) + " is not a multiple of 3073");
    }
    records.insert(records.end(), bytes.begin(), bytes.end());
  }
  if (records.empty()) throw FormatError("no CIFAR-10 batch files given");

  const std::size_t count = records.size() / kCifarRecord;
  CifarData out;
  Dataset& ds = out.dataset;
  ds.class_count = 10;
  ds.images = Tensor(Shape{count, 3, kCifarSide, kCifarSide});
  ds.labels.resize(count);
  for (std::size_t n = 0; n < count; ++n) {
    const unsigned char* rec = records.data() + n * kCifarRecord;
    if (rec[0] > 9) throw FormatError("CIFAR-10 record " + std::to_string(n) + ": label byte > 9");
    ds.labels[n] = rec[0];
    float* img = ds.images.data() + n * kCifarPixels;
    for (std::size_t p = 0; p < kCifarPixels; ++p) img[p] = static_cast<float>(rec[1 + p]) * kPixelScale;
  }
  out.mean = mean ? *mean : mean_image(ds);
  subtract_mean(ds, out.mean);
  return out;
}

Tensor mean_image(const Dataset& data) {
  const std::size_t size = data.sample_size();
  std::vector<double> sum(size, 0.0);
  for (std::size_t n = 0; n < data.size(); ++n) {
    const auto s = data.sample(n);
    for (std::size_t p = 0; p < size; ++p) sum[p] += s[p];
  }
  const Shape& shape = data.images.shape();
  Tensor mean(Shape(shape.dims().subspan(1)));
  for (std::size_t p = 0; p < size; ++p) mean[p] = static_cast<float>(sum[p] / static_cast<double>(data.size()));
  return mean;
}

void subtract_mean(Dataset& data, const Tensor& mean) {
  const std::size_t size = data.sample_size();
  if (mean.count() != size) {
    throw ShapeError("mean image " + mean.shape().str() + " does not match samples of " + data.images.shape().str());
  }
  float* img = data.images.data();
  for (std::size_t n = 0; n < data.size(); ++n) {
    for (std::size_t p = 0; p < size; ++p) img[n * size + p] -= mean[p];
  }
}

Dataset slice(const Dataset& data, std::size_t begin, std::size_t count) {
  if (count == 0 || begin + count > data.size()) throw InputError("slice out of range");
  std::vector<std::size_t> dims(data.images.shape().dims().begin(), data.images.shape().dims().end());
  dims[0] = count;
  Dataset out;
  out.class_count = data.class_count;
  out.images = Tensor(Shape(std::span<const std::size_t>(dims)));
  const std::size_t size = data.sample_size();
  std::copy_n(data.images.data() + begin * size, count * size, out.images.data());
  out.labels.assign(data.labels.begin() + static_cast<std::ptrdiff_t>(begin),
                    data.labels.begin() + static_cast<std::ptrdiff_t>(begin + count));
  return out;
}

BatchIterator::BatchIterator(const Dataset& data, std::size_t batch, std::optional<std::uint64_t> seed)
    : data_(&data), batch_(batch) {
  if (batch == 0) throw InputError("batch size must be >= 1");
  if (data.size() == 0) throw InputError("cannot iterate an empty dataset");
  if (batch > data.size()) {
    throw InputError("batch size " + std::to_string(batch) + " exceeds dataset size " + std::to_string(data.size()));
  }
  if (seed) rng_.emplace(*seed);
  order_.resize(data.size());
  start_epoch();
  epoch_ = 0;
}

void BatchIterator::start_epoch() {
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  if (rng_) rng_->shuffle(std::span<std::size_t>(order_));
  cursor_ = 0;
  ++epoch_;
}

void BatchIterator::next_into(std::span<float> images, std::span<int> labels) {
  const std::size_t size = data_->sample_size();
  if (images.size() != batch_ * size || labels.size() != batch_) throw ShapeError("batch buffers have wrong size");
  for (std::size_t b = 0; b < batch_; ++b) {
    if (cursor_ == order_.size()) start_epoch();
    const std::size_t idx = order_[cursor_++];
    const auto s = data_->sample(idx);
    std::copy(s.begin(), s.end(), images.begin() + static_cast<std::ptrdiff_t>(b * size));
    labels[b] = data_->labels[idx];
  }
}

Batch BatchIterator::next() {
  std::vector<std::size_t> dims(data_->images.shape().dims().begin(), data_->images.shape().dims().end());
  dims[0] = batch_;
  Batch out{Tensor(Shape(std::span<const std::size_t>(dims))), std::vector<int>(batch_)};
  next_into(out.images.values(), out.labels);
  return out;
}

}  // namespace portanet
