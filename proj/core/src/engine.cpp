#include "portanet/engine.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "portanet/error.hpp"

namespace portanet {

namespace {

thread_local bool t_in_region = false;

class RegionFlag {
 public:
  RegionFlag() : previous_(t_in_region) { t_in_region = true; }
  ~RegionFlag() { t_in_region = previous_; }

 private:
  bool previous_;
};

std::exception_ptr run_block(detail::RangeRef blocks, std::size_t begin, std::size_t end) {
  RegionFlag flag;
  try {
    blocks(begin, end);
  } catch (...) {
    return std::current_exception();
  }
  return nullptr;
}

// Fixed-size set of worker threads. Worker w (1-based) always runs block w of
// a region; the calling thread runs block 0.
class WorkerPool {
 public:
  explicit WorkerPool(unsigned width) {
    workers_.reserve(width - 1);
    for (unsigned w = 1; w < width; ++w) {
      workers_.emplace_back([this, w](std::stop_token stop) { work(stop, w); });
    }
  }

  ~WorkerPool() {
    {
      std::lock_guard lock(mutex_);
      stopping_ = true;
    }
    start_.notify_all();
    for (auto& t : workers_) t.request_stop();
    workers_.clear();
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  // Runs `nblocks` blocks of `block` indices over [0, n). Returns the
  // exception of the lowest failing block, if any.
  std::exception_ptr run(std::size_t n, std::size_t block, std::size_t nblocks, detail::RangeRef fn) {
    errors_.assign(nblocks, nullptr);
    {
      std::lock_guard lock(mutex_);
      job_ = Job{&fn, n, block, nblocks};
      pending_ = nblocks - 1;
      ++generation_;
    }
    start_.notify_all();
    errors_[0] = run_block(fn, 0, std::min(block, n));
    {
      std::unique_lock lock(mutex_);
      done_.wait(lock, [this] { return pending_ == 0; });
    }
    for (auto& e : errors_) {
      if (e) return e;
    }
    return nullptr;
  }

 private:
  struct Job {
    detail::RangeRef* fn = nullptr;
    std::size_t n = 0;
    std::size_t block = 0;
    std::size_t nblocks = 0;
  };

  void work(const std::stop_token& stop, std::size_t index) {
    std::uint64_t seen = 0;
    for (;;) {
      Job job;
      {
        std::unique_lock lock(mutex_);
        start_.wait(lock, [&] { return stopping_ || generation_ != seen; });
        if (stopping_ || stop.stop_requested()) return;
        seen = generation_;
        job = job_;
      }
      if (index >= job.nblocks) continue;
      const std::size_t begin = index * job.block;
      const std::size_t end = std::min(begin + job.block, job.n);
      errors_[index] = run_block(*job.fn, begin, end);
      {
        std::lock_guard lock(mutex_);
        if (--pending_ == 0) done_.notify_one();
      }
    }
  }

  std::mutex mutex_;
  std::condition_variable start_;
  std::condition_variable done_;
  Job job_;
  std::uint64_t generation_ = 0;
  std::size_t pending_ = 0;
  bool stopping_ = false;
  std::vector<std::exception_ptr> errors_;
  std::vector<std::jthread> workers_;
};

struct EngineState {
  std::mutex config_mutex;
  Policy policy = Policy::sequential();
  std::mutex dispatch_mutex;
  std::map<unsigned, std::unique_ptr<WorkerPool>> pools;
  std::atomic<int> active{0};
};

EngineState& state() {
  static EngineState s;
  return s;
}

[[noreturn]] void rethrow_as_engine_error(std::exception_ptr error) {
  std::string message = "kernel failed";
  try {
    std::rethrow_exception(error);
  } catch (const EngineError&) {
    throw;
  } catch (const std::exception& e) {
    message += ": ";
    message += e.what();
  } catch (...) {
    message += ": unknown exception";
  }
  throw EngineError(message, error);
}

}  // namespace

Policy Policy::multithreaded(unsigned threads) {
  if (threads == 0) throw InputError("multithreaded policy needs at least one thread");
  return {Kind::multithreaded, threads};
}

std::string Policy::str() const {
  return kind == Kind::sequential ? std::string("seq") : "threads(" + std::to_string(threads) + ")";
}

void set_policy(const Policy& policy) {
  if (t_in_region || state().active.load() > 0) {
    throw ContractError("set_policy called while a parallel region is active");
  }
  if (policy.kind == Policy::Kind::multithreaded && policy.threads == 0) {
    throw InputError("multithreaded policy needs at least one thread");
  }
  std::lock_guard lock(state().config_mutex);
  state().policy = policy;
}

Policy current_policy() {
  std::lock_guard lock(state().config_mutex);
  return state().policy;
}

bool in_parallel_region() noexcept { return t_in_region; }

unsigned default_thread_count() {
  if (const char* env = std::getenv("PORTANET_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (*end != '\0' || value <= 0 || value > 4096) {
      throw InputError(std::string("PORTANET_THREADS must be a positive integer, got '") + env + "'");
    }
    return static_cast<unsigned>(value);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void check_disjoint(std::span<const float> output, std::span<const float> input, const char* what) {
  if (output.empty() || input.empty()) return;
  const auto out_begin = reinterpret_cast<std::uintptr_t>(output.data());
  const auto out_end = out_begin + output.size_bytes();
  const auto in_begin = reinterpret_cast<std::uintptr_t>(input.data());
  const auto in_end = in_begin + input.size_bytes();
  if (out_begin < in_end && in_begin < out_end) {
    throw ContractError(std::string(what) + ": output aliases an input");
  }
}

namespace detail {

void dispatch(std::size_t n, RangeRef blocks, const Policy& policy) {
  if (n == 0) return;
  // Nested regions run inline on the worker that reached them.
  if (t_in_region) {
    blocks(0, n);
    return;
  }
  const std::size_t width = policy.width();
  const std::size_t block = (n + width - 1) / width;
  const std::size_t nblocks = (n + block - 1) / block;

  auto& s = state();
  std::lock_guard lock(s.dispatch_mutex);
  s.active.fetch_add(1);
  std::exception_ptr error;
  if (nblocks == 1) {
    error = run_block(blocks, 0, n);
  } else {
    auto& pool = s.pools[policy.threads];
    if (!pool) pool = std::make_unique<WorkerPool>(policy.threads);
    error = pool->run(n, block, nblocks, blocks);
  }
  s.active.fetch_sub(1);
  if (error) rethrow_as_engine_error(error);
}

}  // namespace detail

}  // namespace portanet
