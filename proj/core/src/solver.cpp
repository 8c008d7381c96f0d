#include "portanet/solver.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "portanet/config.hpp"
#include "portanet/error.hpp"
#include "portanet/linalg.hpp"

namespace portanet {

namespace {

SolverSpec from_sections(const std::vector<ConfigSection>& sections) {
  if (sections.size() != 1 || sections[0].kind != "solver") {
    throw ConfigError("a solver description holds exactly one [solver] section");
  }
  KeyReader keys(sections[0]);
  SolverSpec s;
  s.base_lr = static_cast<float>(keys.take_real("base_lr", s.base_lr));
  const std::string policy = keys.take("lr_policy").value_or("fixed");
  if (policy == "fixed") {
    s.lr_policy = LrPolicy::fixed;
  } else if (policy == "inv") {
    s.lr_policy = LrPolicy::inv;
  } else {
    throw ConfigError("unknown lr_policy '" + policy + "' (expected fixed or inv)");
  }
  s.gamma = static_cast<float>(keys.take_real("gamma", s.gamma));
  s.power = static_cast<float>(keys.take_real("power", s.power));
  s.momentum = static_cast<float>(keys.take_real("momentum", s.momentum));
  s.weight_decay = static_cast<float>(keys.take_real("weight_decay", s.weight_decay));
  s.max_iter = keys.take_count("max_iter", s.max_iter);
  s.test_interval = keys.take_count("test_interval", s.test_interval);
  s.test_iter = keys.take_count("test_iter", s.test_iter);
  s.snapshot_interval = keys.take_count("snapshot_interval", s.snapshot_interval);
  s.batch_size = keys.take_count("batch_size", s.batch_size);
  s.test_batch_size = keys.take_count("test_batch_size", s.test_batch_size);
  s.seed = static_cast<std::uint64_t>(keys.take_integer("seed", static_cast<std::int64_t>(s.seed)));
  keys.finish();
  s.validate();
  return s;
}

}  // namespace

SolverSpec SolverSpec::parse(std::string_view text) { return from_sections(parse_config(text)); }

SolverSpec SolverSpec::from_file(const std::filesystem::path& path) {
  try {
    return from_sections(read_config_file(path));
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    if (what.rfind(path.string(), 0) == 0) throw;
    throw ConfigError(path.string() + ": " + what);
  }
}

void SolverSpec::validate() const {
  if (!(base_lr > 0.0f)) throw ConfigError("base_lr must be > 0");
  if (!(momentum >= 0.0f && momentum < 1.0f)) throw ConfigError("momentum must be in [0, 1)");
  if (!(weight_decay >= 0.0f)) throw ConfigError("weight_decay must be >= 0");
  if (lr_policy == LrPolicy::inv && !(gamma >= 0.0f && power >= 0.0f)) {
    throw ConfigError("inv policy needs gamma >= 0 and power >= 0");
  }
  if (batch_size == 0 || test_batch_size == 0) throw ConfigError("batch sizes must be >= 1");
}

float learning_rate(const SolverSpec& spec, std::size_t iter) {
  if (spec.lr_policy == LrPolicy::fixed) return spec.base_lr;
  const double base = 1.0 + static_cast<double>(spec.gamma) * static_cast<double>(iter);
  return static_cast<float>(spec.base_lr * std::pow(base, -static_cast<double>(spec.power)));
}

void sgd_step(SolverState& state, const SolverSpec& spec, std::span<Blob* const> learnables) {
  if (state.history.empty()) {
    for (Blob* b : learnables) state.history.emplace_back(b->shape(), 0.0f);
  }
  if (state.history.size() != learnables.size()) throw ShapeError("solver state does not match the learnable blobs");
  const float rate = learning_rate(spec, state.iter);
  for (std::size_t i = 0; i < learnables.size(); ++i) {
    Blob& blob = *learnables[i];
    Tensor& velocity = state.history[i];
    if (!(velocity.shape() == blob.shape())) throw ShapeError("momentum buffer shape differs from its blob");
    if (spec.weight_decay != 0.0f) axpby(spec.weight_decay, blob.data(), 1.0f, blob.diff());
    axpby(rate, blob.diff(), spec.momentum, velocity);
    std::copy(velocity.values().begin(), velocity.values().end(), blob.diff().values().begin());
    blob.update();
  }
  ++state.iter;
}

Evaluation evaluate(Net& net, const Dataset& data, std::size_t batch, std::size_t batches) {
  if (batch == 0) throw InputError("evaluation batch size must be >= 1");
  const std::size_t available = (data.size() + batch - 1) / batch;
  const std::size_t count = batches == 0 ? available : std::min(batches, available);
  double loss_sum = 0.0;
  double correct = 0.0;
  std::size_t seen = 0;
  for (std::size_t b = 0; b < count; ++b) {
    const std::size_t begin = b * batch;
    const std::size_t size = std::min(batch, data.size() - begin);
    net.reshape(size);
    net.set_input(data.images.values().subspan(begin * data.sample_size(), size * data.sample_size()),
                  std::span<const int>(data.labels).subspan(begin, size));
    const float loss = net.forward();
    loss_sum += static_cast<double>(loss) * static_cast<double>(size);
    if (const auto acc = net.accuracy()) correct += std::round(static_cast<double>(*acc) * static_cast<double>(size));
    seen += size;
  }
  net.reshape(batch);
  Evaluation e;
  e.samples = seen;
  e.loss = seen ? loss_sum / static_cast<double>(seen) : 0.0;
  e.accuracy = seen ? correct / static_cast<double>(seen) : 0.0;
  return e;
}

Solver::Solver(SolverSpec spec, Net& net, const Dataset& train, const Dataset* test)
    : spec_(std::move(spec)), net_(net), train_(train), test_(test), batches_(train, spec_.batch_size, spec_.seed) {
  spec_.validate();
  const Shape sample = net.sample_shape();
  if (train.sample_size() != sample.count()) {
    throw ShapeError("training samples do not match the net input " + sample.str());
  }
}

float Solver::step() {
  net_.reshape(spec_.batch_size);
  images_.resize(spec_.batch_size * train_.sample_size());
  labels_.resize(spec_.batch_size);
  batches_.next_into(images_, labels_);
  net_.set_input(images_, labels_);
  net_.zero_param_diffs();
  const float loss = net_.forward();
  net_.backward();
  const auto learnables = net_.learnables();
  sgd_step(state_, spec_, learnables);
  train_losses_.push_back(loss);
  if (on_step) on_step({state_.iter, loss, net_.accuracy().value_or(0.0f)});
  return loss;
}

MetricRecord Solver::test() {
  if (test_ == nullptr) throw InputError("no test set attached to the solver");
  const Evaluation e = evaluate(net_, *test_, spec_.test_batch_size, spec_.test_iter);
  net_.reshape(spec_.batch_size);
  MetricRecord r{state_.iter, e.loss, e.accuracy};
  test_log_.push_back(r);
  if (on_test) on_test(r);
  return r;
}

void Solver::run(std::optional<std::size_t> until) {
  const std::size_t stop = until.value_or(spec_.max_iter);
  const bool testing = test_ != nullptr && spec_.test_interval > 0;
  while (state_.iter < stop) {
    if (testing && state_.iter % spec_.test_interval == 0) test();
    step();
    if (spec_.snapshot_interval > 0 && state_.iter % spec_.snapshot_interval == 0 && on_snapshot) {
      on_snapshot(state_.iter);
    }
  }
  if (testing && (test_log_.empty() || test_log_.back().iter != state_.iter)) test();
}

TrainResult train(Net& net, const SolverSpec& spec, const Dataset& train_set, const Dataset* test_set) {
  Solver solver(spec, net, train_set, test_set);
  solver.run();
  return {solver.state(), solver.train_losses(), solver.test_log()};
}

}  // namespace portanet
