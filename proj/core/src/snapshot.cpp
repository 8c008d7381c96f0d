#include "portanet/snapshot.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "portanet/error.hpp"

namespace portanet {

namespace {

constexpr std::array<char, 4> kMagic{'P', 'N', 'S', 'N'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

class Reader {
 public:
  Reader(std::vector<unsigned char> bytes, std::string where) : bytes_(std::move(bytes)), where_(std::move(where)) {}

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError(where_ + ": truncated snapshot");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return v;
  }
  const unsigned char* take(std::size_t n) {
    need(n);
    const unsigned char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  bool done() const { return pos_ == bytes_.size(); }
  const std::string& where() const { return where_; }

 private:
  std::vector<unsigned char> bytes_;
  std::size_t pos_ = 0;
  std::string where_;
};

}  // namespace

void save_tensors(const std::filesystem::path& path, const std::vector<const Tensor*>& tensors) {
  std::string out(kMagic.begin(), kMagic.end());
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const Tensor* t : tensors) {
    const Shape& s = t->shape();
    put_u32(out, static_cast<std::uint32_t>(s.rank()));
    for (std::size_t d : s.dims()) put_u32(out, static_cast<std::uint32_t>(d));
    for (float f : t->values()) put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("write failed for " + path.string());
}

std::vector<Tensor> load_tensors(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open " + path.string());
  Reader in({std::istreambuf_iterator<char>(file), std::istreambuf_iterator<char>()}, path.string());

  if (std::memcmp(in.take(4), kMagic.data(), 4) != 0) throw FormatError(in.where() + ": not a PNSN file");
  if (const auto v = in.u32(); v != kVersion) {
    throw FormatError(in.where() + ": unsupported snapshot version " + std::to_string(v));
  }
  const std::uint32_t count = in.u32();
  std::vector<Tensor> tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t rank = in.u32();
    if (rank < 1 || rank > 4) throw FormatError(in.where() + ": tensor rank " + std::to_string(rank));
    std::vector<std::size_t> dims(rank);
    std::size_t total = 1;
    for (auto& d : dims) {
      d = in.u32();
      if (d == 0) throw FormatError(in.where() + ": zero extent");
      total *= d;
    }
    in.need(total * 4);
    Tensor t{Shape(std::span<const std::size_t>(dims))};
    const unsigned char* p = in.take(total * 4);
    for (std::size_t k = 0; k < total; ++k) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) bits |= std::uint32_t{p[4 * k + b]} << (8 * b);
      t[k] = std::bit_cast<float>(bits);
    }
    tensors.push_back(std::move(t));
  }
  if (!in.done()) throw FormatError(in.where() + ": trailing bytes after the last tensor");
  return tensors;
}

void snapshot_save(Net& net, const std::filesystem::path& path) {
  std::vector<const Tensor*> tensors;
  for (Blob* b : net.learnables()) tensors.push_back(&b->data());
  save_tensors(path, tensors);
}

void snapshot_load(Net& net, const std::filesystem::path& path) {
  auto tensors = load_tensors(path);
  const auto learnables = net.learnables();
  if (tensors.size() != learnables.size()) {
    throw ShapeError(path.string() + ": holds " + std::to_string(tensors.size()) + " blobs, net has " +
                     std::to_string(learnables.size()));
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (!(tensors[i].shape() == learnables[i]->shape())) {
      throw ShapeError(path.string() + ": blob " + std::to_string(i) + " is " + tensors[i].shape().str() +
                       ", net expects " + learnables[i]->shape().str());
    }
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    std::copy(tensors[i].values().begin(), tensors[i].values().end(), learnables[i]->data().values().begin());
  }
}

}  // namespace portanet
