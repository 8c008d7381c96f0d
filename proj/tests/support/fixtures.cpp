#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "portanet/random.hpp"

namespace portanet::testing {

namespace {

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

std::vector<std::uint8_t> synthetic_records(std::size_t count, Rng& rng) {
  constexpr std::size_t side = 32;
  std::vector<std::uint8_t> labels(count);
  std::vector<std::uint8_t> pixels(count * 3 * side * side);
  for (std::size_t n = 0; n < count; ++n) {
    const std::uint32_t label = rng.below(10);
    labels[n] = static_cast<std::uint8_t>(label);
    const double angle = 3.14159265358979 * label / 10.0;
    const double fx = std::cos(angle) * 0.6;
    const double fy = std::sin(angle) * 0.6;
    for (std::size_t c = 0; c < 3; ++c) {
      const double tint = 0.25 + 0.5 * ((label * (c + 3)) % 7) / 6.0;
      for (std::size_t y = 0; y < side; ++y) {
        for (std::size_t x = 0; x < side; ++x) {
          const double stripe = 0.5 + 0.5 * std::sin(fx * x + fy * y);
          const double v = 255.0 * (0.5 * tint + 0.35 * stripe + 0.15 * rng.uniform01());
          pixels[((n * 3 + c) * side + y) * side + x] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
        }
      }
    }
  }
  return cifar_records(labels, pixels);
}

}  // namespace

TempDir::TempDir(const std::string& tag) {
  std::random_device rd;
  const auto base = std::filesystem::temp_directory_path();
  for (int attempt = 0; attempt < 100; ++attempt) {
    auto candidate = base / ("portanet-" + tag + "-" + std::to_string(rd()));
    if (std::filesystem::create_directory(candidate)) {
      path_ = candidate;
      return;
    }
  }
  throw std::runtime_error("cannot create a temporary directory");
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::vector<std::uint8_t> idx_images(std::uint32_t count, std::uint32_t rows, std::uint32_t cols,
                                     std::span<const std::uint8_t> pixels) {
  std::vector<std::uint8_t> out;
  put_be32(out, 0x00000803);
  put_be32(out, count);
  put_be32(out, rows);
  put_be32(out, cols);
  out.insert(out.end(), pixels.begin(), pixels.end());
  return out;
}

std::vector<std::uint8_t> idx_labels(std::span<const std::uint8_t> labels) {
  std::vector<std::uint8_t> out;
  put_be32(out, 0x00000801);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

std::vector<std::uint8_t> cifar_records(std::span<const std::uint8_t> labels, std::span<const std::uint8_t> pixels) {
  constexpr std::size_t image = 3072;
  if (pixels.size() != labels.size() * image) throw std::invalid_argument("cifar_records: pixel count");
  std::vector<std::uint8_t> out;
  out.reserve(labels.size() * (image + 1));
  for (std::size_t n = 0; n < labels.size(); ++n) {
    out.push_back(labels[n]);
    out.insert(out.end(), pixels.begin() + static_cast<std::ptrdiff_t>(n * image),
               pixels.begin() + static_cast<std::ptrdiff_t>((n + 1) * image));
  }
  return out;
}

void write_synthetic_cifar(const std::filesystem::path& dir, std::size_t train_count, std::size_t test_count,
                           std::uint64_t seed) {
  Rng rng(seed);
  write_bytes(dir / "data_batch_1.bin", synthetic_records(train_count, rng));
  write_bytes(dir / "test_batch.bin", synthetic_records(test_count, rng));
}

}  // namespace portanet::testing
