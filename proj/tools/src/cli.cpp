#include "portanet/tools/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <chrono>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

#include "portanet/data.hpp"
#include "portanet/engine.hpp"
#include "portanet/error.hpp"
#include "portanet/random.hpp"
#include "portanet/snapshot.hpp"
#include "portanet/solver.hpp"

namespace portanet::tools {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr std::size_t kWarmup = 5;

struct Options {
  std::string net;
  std::string solver;
  std::string snapshot;
  std::string data_dir;
  std::string backend;
  std::optional<unsigned> threads;
  std::size_t iterations = 50;
  std::size_t batch = 0;
  std::optional<std::uint64_t> seed;
};

// Shortest text that reads back to the same value.
template <typename T>
std::string num(T v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string ms(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

Policy resolve_policy(const Options& o) {
  const std::string backend = o.backend.empty() ? (o.threads ? "threads" : "seq") : o.backend;
  if (backend == "seq") {
    if (o.threads) throw InputError("--threads needs --backend threads");
    return Policy::sequential();
  }
  return Policy::multithreaded(o.threads ? *o.threads : default_thread_count());
}

struct Splits {
  Dataset train;
  Dataset test;
  std::optional<Tensor> mean;  // CIFAR-10 only
};

bool is_mnist(const fs::path& dir) { return fs::exists(dir / "t10k-images-idx3-ubyte"); }

bool is_cifar(const fs::path& dir) { return fs::exists(dir / "test_batch.bin"); }

Dataset mnist_split(const fs::path& dir, const std::string& prefix) {
  return load_mnist(dir / (prefix + "-images-idx3-ubyte"), dir / (prefix + "-labels-idx1-ubyte"));
}

std::vector<fs::path> cifar_train_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (int i = 1; i <= 5; ++i) {
    const fs::path f = dir / ("data_batch_" + std::to_string(i) + ".bin");
    if (fs::exists(f)) files.push_back(f);
  }
  if (files.empty()) throw IoError(dir.string() + ": no data_batch_<n>.bin files");
  return files;
}

Splits load_splits(const fs::path& dir) {
  Splits s;
  if (is_mnist(dir)) {
    s.train = mnist_split(dir, "train");
    s.test = mnist_split(dir, "t10k");
  } else if (is_cifar(dir)) {
    const auto files = cifar_train_files(dir);
    CifarData train = load_cifar10(files);
    const fs::path test_file = dir / "test_batch.bin";
    s.test = load_cifar10(std::span(&test_file, 1), &train.mean).dataset;
    s.train = std::move(train.dataset);
    s.mean = std::move(train.mean);
  } else {
    throw IoError(dir.string() + ": neither MNIST (t10k-images-idx3-ubyte) nor CIFAR-10 (test_batch.bin) files found");
  }
  return s;
}

Dataset load_test_split(const fs::path& dir, const fs::path& snapshot) {
  if (is_mnist(dir)) return mnist_split(dir, "t10k");
  if (!is_cifar(dir)) {
    throw IoError(dir.string() + ": neither MNIST (t10k-images-idx3-ubyte) nor CIFAR-10 (test_batch.bin) files found");
  }
  const fs::path test_file = dir / "test_batch.bin";
  const fs::path mean_file = snapshot.string() + ".mean";
  if (!snapshot.empty() && fs::exists(mean_file)) {
    auto tensors = load_tensors(mean_file);
    if (tensors.size() != 1) throw FormatError(mean_file.string() + ": expected one tensor");
    return load_cifar10(std::span(&test_file, 1), &tensors[0]).dataset;
  }
  // No stored mean: fall back to the training files.
  const Tensor mean = load_cifar10(cifar_train_files(dir)).mean;
  return load_cifar10(std::span(&test_file, 1), &mean).dataset;
}

int run_train(const Options& o, std::ostream& out) {
  const NetSpec net_spec = NetSpec::from_file(o.net);
  SolverSpec spec = SolverSpec::from_file(o.solver);
  if (o.seed) spec.seed = *o.seed;
  const Splits data = load_splits(o.data_dir);
  const fs::path snapshot = o.snapshot.empty() ? fs::path(fs::path(o.net).stem().string() + ".pnsn") : fs::path(o.snapshot);

  Net net(net_spec, spec.batch_size, spec.seed);
  Solver solver(spec, net, data.train, &data.test);
  solver.on_step = [&](const MetricRecord& r) {
    out << "iter=" << r.iter << " loss=" << num(static_cast<float>(r.loss)) << " acc=" << num(static_cast<float>(r.accuracy))
        << '\n';
  };
  solver.on_test = [&](const MetricRecord& r) {
    out << "phase=test iter=" << r.iter << " loss=" << num(r.loss) << " acc=" << num(r.accuracy) << '\n';
  };
  solver.on_snapshot = [&](std::size_t) { snapshot_save(net, snapshot); };
  solver.run();

  snapshot_save(net, snapshot);
  out << "snapshot=" << snapshot.string() << '\n';
  if (data.mean) {
    const fs::path mean_file = snapshot.string() + ".mean";
    save_tensors(mean_file, {&*data.mean});
    out << "mean=" << mean_file.string() << '\n';
  }
  return 0;
}

int run_test(const Options& o, std::ostream& out) {
  const NetSpec net_spec = NetSpec::from_file(o.net);
  const std::size_t batch = o.batch ? o.batch : 100;
  const Dataset test = load_test_split(o.data_dir, o.snapshot);
  Net net(net_spec, batch, o.seed.value_or(1));
  if (!o.snapshot.empty()) snapshot_load(net, o.snapshot);
  const Evaluation e = evaluate(net, test, batch);
  out << "accuracy=" << num(e.accuracy) << " loss=" << num(e.loss) << " samples=" << e.samples << '\n';
  return 0;
}

int run_time(const Options& o, std::ostream& out) {
  const NetSpec net_spec = NetSpec::from_file(o.net);
  const std::size_t batch = o.batch ? o.batch : 64;
  const std::uint64_t seed = o.seed.value_or(1);
  if (o.iterations == 0) throw InputError("--iterations must be >= 1");
  Net net(net_spec, batch, seed);

  std::vector<float> images(batch * net.sample_shape().count());
  std::vector<int> labels(batch, 0);
  if (!o.data_dir.empty()) {
    const Dataset train = is_mnist(o.data_dir) ? mnist_split(o.data_dir, "train") : load_splits(o.data_dir).train;
    BatchIterator it(train, batch, std::nullopt);
    it.next_into(images, labels);
  } else {
    Rng rng(seed);
    for (float& v : images) v = rng.uniform01();
  }
  net.set_input(images, labels);

  const std::size_t layers = net.num_layers();
  std::vector<double> forward_ms(layers, 0.0);
  std::vector<double> backward_ms(layers, 0.0);
  double total_ms = 0.0;
  const auto elapsed = [](Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
  };

  for (std::size_t it = 0; it < kWarmup + o.iterations; ++it) {
    const bool timed = it >= kWarmup;
    const auto pass = Clock::now();
    for (std::size_t i = 0; i < layers; ++i) {
      const auto t = Clock::now();
      net.forward_layer(i);
      if (timed) forward_ms[i] += elapsed(t);
    }
    for (std::size_t i = layers; i-- > 0;) {
      const auto t = Clock::now();
      net.backward_layer(i);
      if (timed) backward_ms[i] += elapsed(t);
    }
    if (timed) total_ms += elapsed(pass);
  }

  const double n = static_cast<double>(o.iterations);
  double forward_sum = 0.0;
  double backward_sum = 0.0;
  for (std::size_t i = 0; i < layers; ++i) {
    out << "layer=" << net.layer(i).name() << " type=" << net.layer(i).type() << " forward_ms=" << ms(forward_ms[i] / n)
        << " backward_ms=" << ms(backward_ms[i] / n) << '\n';
    forward_sum += forward_ms[i];
    backward_sum += backward_ms[i];
  }
  const Policy policy = current_policy();
  out << "average_forward_ms=" << ms(forward_sum / n) << " average_backward_ms=" << ms(backward_sum / n)
      << " average_forward_backward_ms=" << ms(total_ms / n) << " iterations=" << o.iterations << " batch=" << batch
      << " backend=" << (policy.kind == Policy::Kind::sequential ? "seq" : "threads") << " threads=" << policy.width()
      << '\n';
  return 0;
}

void add_common(CLI::App& cmd, Options& o) {
  cmd.add_option("--backend", o.backend, "Execution backend")->check(CLI::IsMember({"seq", "threads"}));
  cmd.add_option("--threads", o.threads, "Worker threads for the threads backend (default: PORTANET_THREADS)")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--seed", o.seed, "Random seed");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"portanet: train, test and time small convolutional nets", "portanet"};
  app.require_subcommand(1);
  Options o;

  CLI::App* train = app.add_subcommand("train", "Train a net and write a snapshot");
  train->add_option("--net", o.net, "Net description")->required()->check(CLI::ExistingFile);
  train->add_option("--solver", o.solver, "Solver description")->required()->check(CLI::ExistingFile);
  train->add_option("--data-dir", o.data_dir, "Directory with MNIST or CIFAR-10 files")->required();
  train->add_option("--snapshot", o.snapshot, "Output snapshot (default: <net>.pnsn)");
  add_common(*train, o);

  CLI::App* test = app.add_subcommand("test", "Evaluate a net on the test split");
  test->add_option("--net", o.net, "Net description")->required()->check(CLI::ExistingFile);
  test->add_option("--data-dir", o.data_dir, "Directory with MNIST or CIFAR-10 files")->required();
  test->add_option("--snapshot", o.snapshot, "Snapshot to load (default: freshly initialized weights)");
  test->add_option("--batch", o.batch, "Evaluation batch size (default 100)")->check(CLI::PositiveNumber);
  add_common(*test, o);

  CLI::App* time = app.add_subcommand("time", "Average per-layer forward/backward time");
  time->add_option("--net", o.net, "Net description")->required()->check(CLI::ExistingFile);
  time->add_option("--data-dir", o.data_dir, "Use the first training batch instead of random input");
  time->add_option("--iterations", o.iterations, "Timed passes after 5 warm-up passes (default 50)");
  time->add_option("--batch", o.batch, "Batch size (default 64)")->check(CLI::PositiveNumber);
  add_common(*time, o);

  std::vector<const char*> argv{"portanet"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    const ScopedPolicy scope(resolve_policy(o));
    if (train->parsed()) return run_train(o, out);
    if (test->parsed()) return run_test(o, out);
    return run_time(o, out);
  } catch (const std::exception& e) {
    err << "portanet: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace portanet::tools
