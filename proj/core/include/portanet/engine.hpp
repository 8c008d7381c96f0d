#pragma once

// Single-source parallel engine. Every numeric kernel in the library is
// written once as a per-index (or per-row) callable and handed to
// for_each_index / for_each_row; the active Policy decides whether it runs on
// the calling thread or is split across worker threads.
//
// Partitioning is static: the index range [0, n) is cut into contiguous blocks
// of ceil(n / threads) indices, block b going to thread b. There is no work
// stealing and no cross-block reduction, so results never depend on the
// thread count.

#include <cstddef>
#include <span>
#include <string>
#include <type_traits>
#include <utility>

#include "portanet/tensor.hpp"

namespace portanet {

struct Policy {
  enum class Kind { sequential, multithreaded };

  Kind kind = Kind::sequential;
  unsigned threads = 1;

  static Policy sequential() { return {Kind::sequential, 1}; }
  static Policy multithreaded(unsigned threads);

  /// Number of threads that execute a region, counting the caller.
  unsigned width() const noexcept { return kind == Kind::sequential ? 1u : threads; }
  std::string str() const;

  friend bool operator==(const Policy&, const Policy&) = default;
};

/// Installs `policy` for later calls that do not pass one explicitly.
/// Throws ContractError when called from inside a running kernel.
void set_policy(const Policy& policy);
Policy current_policy();

/// True while the calling thread is executing an engine kernel.
bool in_parallel_region() noexcept;

/// Value of PORTANET_THREADS, or the hardware concurrency when it is unset.
/// Throws InputError if the variable is set but not a positive integer.
unsigned default_thread_count();

/// Sets a policy for the lifetime of the guard and restores the previous one.
class ScopedPolicy {
 public:
  explicit ScopedPolicy(const Policy& policy) : previous_(current_policy()) { set_policy(policy); }
  ~ScopedPolicy() { set_policy(previous_); }
  ScopedPolicy(const ScopedPolicy&) = delete;
  ScopedPolicy& operator=(const ScopedPolicy&) = delete;

 private:
  Policy previous_;
};

/// Throws ContractError if the two address ranges overlap.
void check_disjoint(std::span<const float> output, std::span<const float> input, const char* what);

namespace detail {

/// Non-owning reference to a `void(size_t begin, size_t end)` callable.
class RangeRef {
 public:
  template <typename F>
    requires(!std::is_same_v<std::remove_cvref_t<F>, RangeRef>)
  RangeRef(F& f) noexcept  // NOLINT: implicit by design of a function reference
      : object_(static_cast<void*>(&f)),
        call_([](void* o, std::size_t b, std::size_t e) { (*static_cast<F*>(o))(b, e); }) {}

  void operator()(std::size_t begin, std::size_t end) const { call_(object_, begin, end); }

 private:
  void* object_;
  void (*call_)(void*, std::size_t, std::size_t);
};

void dispatch(std::size_t n, RangeRef blocks, const Policy& policy);

}  // namespace detail

/// Calls `kernel(begin, end)` once per contiguous block of the partition.
template <typename Kernel>
void for_each_block(std::size_t n, Kernel&& kernel, const Policy& policy) {
  auto range = [&kernel](std::size_t begin, std::size_t end) { kernel(begin, end); };
  detail::dispatch(n, detail::RangeRef(range), policy);
}

template <typename Kernel>
void for_each_block(std::size_t n, Kernel&& kernel) {
  for_each_block(n, std::forward<Kernel>(kernel), current_policy());
}

/// Calls `kernel(i)` exactly once for every i in [0, n).
template <typename Kernel>
void for_each_index(std::size_t n, Kernel&& kernel, const Policy& policy) {
  auto range = [&kernel](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) kernel(i);
  };
  detail::dispatch(n, detail::RangeRef(range), policy);
}

template <typename Kernel>
void for_each_index(std::size_t n, Kernel&& kernel) {
  for_each_index(n, std::forward<Kernel>(kernel), current_policy());
}

/// Calls `kernel(i, row_i)` once per row of `m`.
template <typename T, typename Kernel>
void for_each_row(BasicMatrixView<T> m, Kernel&& kernel, const Policy& policy) {
  T* base = m.data();
  const std::size_t cols = m.cols();
  for_each_index(
      m.rows(), [&](std::size_t i) { kernel(i, std::span<T>(base + i * cols, cols)); }, policy);
}

template <typename T, typename Kernel>
void for_each_row(BasicMatrixView<T> m, Kernel&& kernel) {
  for_each_row(m, std::forward<Kernel>(kernel), current_policy());
}

}  // namespace portanet
