#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <map>

#include "gradient_check.hpp"
#include "portanet/data.hpp"
#include "portanet/engine.hpp"
#include "portanet/error.hpp"
#include "portanet/net.hpp"

namespace portanet {
namespace {

namespace fs = std::filesystem;

const fs::path kNets = fs::path(PORTANET_SOURCE_DIR) / "nets";
const fs::path kMnist = fs::path(PORTANET_SOURCE_DIR) / "data" / "mnist";

constexpr const char* kTinyNet = R"(
[layer]
name = input
type = Input
top = data, label
channels = 1
height = 4
width = 4

[layer]
name = conv
type = Convolution
bottom = data
top = conv
num_output = 2
kernel_size = 3

[layer]
name = ip
type = InnerProduct
bottom = conv
top = ip
num_output = 3

[layer]
name = loss
type = SoftmaxWithLoss
bottom = ip, label
top = loss
)";

std::map<std::string, int> count_types(const Net& net) {
  std::map<std::string, int> counts;
  for (std::size_t i = 0; i < net.num_layers(); ++i) ++counts[std::string(net.layer(i).type())];
  return counts;
}

void fill_input(Net& net, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> images(net.batch() * net.sample_shape().count());
  testing::fill_uniform(images, rng, 0.0f, 1.0f);
  std::vector<int> labels(net.batch());
  for (int& l : labels) l = static_cast<int>(rng.below(3));
  net.set_input(images, labels);
}

TEST(Net, MnistLayerCounts) {
  const Net net(NetSpec::from_file(kNets / "mnist_lenet.net"), 2, 1);
  const auto counts = count_types(net);
  EXPECT_EQ(counts.at("Convolution"), 2);
  EXPECT_EQ(counts.at("Pooling"), 2);
  EXPECT_EQ(counts.at("InnerProduct"), 2);
  EXPECT_EQ(counts.at("ReLU"), 1);
  EXPECT_EQ(counts.at("SoftmaxWithLoss"), 1);
}

TEST(Net, CifarLayerCounts) {
  const Net net(NetSpec::from_file(kNets / "cifar10_quick.net"), 2, 1);
  const auto counts = count_types(net);
  EXPECT_EQ(counts.at("Convolution"), 3);
  EXPECT_EQ(counts.at("Pooling"), 3);
  EXPECT_EQ(counts.at("InnerProduct"), 2);
  EXPECT_EQ(net.blob("ip2").shape(), (Shape{2, 10}));
}

TEST(Net, UndefinedBlobIsRejected) {
  std::string text = kTinyNet;
  text.replace(text.find("bottom = conv\n"), 14, "bottom = nowhere\n");
  EXPECT_THROW(Net(NetSpec::parse(text), 1, 1), ConfigError);
}

TEST(Net, UnknownLayerTypeIsRejected) {
  std::string text = kTinyNet;
  text.replace(text.find("type = InnerProduct"), 19, "type = Deconvolution");
  EXPECT_THROW(Net(NetSpec::parse(text), 1, 1), ConfigError);
}

TEST(Net, UntrainedLossIsNearLogTen) {
  // Random logits push the expected loss a little above ln 10, and one batch is
  // noisy, so the bound applies to the mean over several initializations.
  const Dataset data = load_mnist(kMnist / "train-images-idx3-ubyte", kMnist / "train-labels-idx1-ubyte");
  BatchIterator it(data, 64, std::nullopt);
  const Batch batch = it.next();
  double sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    Net net(NetSpec::from_file(kNets / "mnist_lenet.net"), 64, seed);
    net.set_input(batch.images.values(), batch.labels);
    const float loss = net.forward();
    EXPECT_NEAR(loss, std::log(10.0f), 0.25f) << "seed " << seed;
    sum += loss;
  }
  EXPECT_NEAR(sum / 8.0, std::log(10.0), 0.1);
}

TEST(Net, ForwardIsDeterministic) {
  Net net(NetSpec::parse(kTinyNet), 5, 3);
  fill_input(net, 4);
  const float first = net.forward();
  EXPECT_EQ(net.forward(), first);
  Net twin(NetSpec::parse(kTinyNet), 5, 3);
  fill_input(twin, 4);
  EXPECT_EQ(twin.forward(), first);
}

TEST(Net, BackwardRunsInReverseOrder) {
  Net net(NetSpec::from_file(kNets / "mnist_lenet.net"), 2, 1);
  fill_input(net, 5);
  std::vector<std::string> log;
  net.set_observer([&](const Layer& l, Pass p) { log.push_back((p == Pass::forward ? "f:" : "b:") + l.name()); });
  net.forward();
  net.backward();
  std::vector<std::string> expected;
  for (std::size_t i = 0; i < net.num_layers(); ++i) expected.push_back("f:" + net.layer(i).name());
  for (std::size_t i = net.num_layers(); i-- > 0;) expected.push_back("b:" + net.layer(i).name());
  EXPECT_EQ(log, expected);
}

TEST(Net, ZeroLossWeightGivesZeroParameterGradients) {
  std::string text = kTinyNet;
  text += "loss_weight = 0\n";
  Net net(NetSpec::parse(text), 4, 6);
  fill_input(net, 7);
  net.zero_param_diffs();
  net.forward();
  net.backward();
  for (Blob* b : net.learnables()) {
    for (float v : b->diff().values()) EXPECT_EQ(v, 0.0f);
  }
}

TEST(Net, ReshapeKeepsParameters) {
  Net net(NetSpec::parse(kTinyNet), 4, 8);
  const Tensor before = net.learnables()[0]->data();
  net.reshape(9);
  EXPECT_EQ(net.blob("data").shape(), (Shape{9, 1, 4, 4}));
  EXPECT_EQ(net.blob("ip").shape(), (Shape{9, 3}));
  EXPECT_TRUE(std::equal(before.values().begin(), before.values().end(), net.learnables()[0]->data().values().begin()));
}

TEST(Net, FullNetGradientCheck) {
  Net net(NetSpec::parse(kTinyNet), 3, 9);
  fill_input(net, 10);
  for (Blob* b : net.learnables()) {
    Rng rng(11);
    testing::fill_uniform(b->data().values(), rng);
  }
  net.zero_param_diffs();
  net.forward();
  net.backward();

  Rng pick(12);
  testing::GradientReport report;
  const auto learnables = net.learnables();
  std::size_t total = 0;
  for (Blob* b : learnables) total += b->count();
  for (int k = 0; k < 10; ++k) {
    std::size_t flat = pick.below(static_cast<std::uint32_t>(total));
    std::size_t which = 0;
    while (flat >= learnables[which]->count()) flat -= learnables[which++]->count();
    Blob& b = *learnables[which];
    const std::vector<float> analytic(b.diff().values().begin(), b.diff().values().end());
    const std::size_t index[] = {flat};
    testing::check_gradient([&] { return static_cast<double>(net.forward()); }, b.data().values(), analytic,
                            "param" + std::to_string(which), report, {}, index);
  }
  EXPECT_EQ(report.checked, 10u);
  EXPECT_TRUE(report.ok()) << report.first_failure;
}

TEST(Net, SameLossAndGradientsUnderEveryPolicy) {
  Net net(NetSpec::from_file(kNets / "mnist_lenet.net"), 4, 2);
  fill_input(net, 13);
  net.zero_param_diffs();
  const float loss = net.forward();
  net.backward();
  std::vector<Tensor> grads;
  for (Blob* b : net.learnables()) grads.push_back(b->diff());
  for (unsigned threads : {1u, 2u, 8u}) {
    const ScopedPolicy scope(Policy::multithreaded(threads));
    net.zero_param_diffs();
    EXPECT_EQ(net.forward(), loss);
    net.backward();
    const auto learnables = net.learnables();
    for (std::size_t i = 0; i < grads.size(); ++i) {
      EXPECT_TRUE(std::equal(grads[i].values().begin(), grads[i].values().end(), learnables[i]->diff().values().begin()))
          << "blob " << i << " threads " << threads;
    }
  }
}

}  // namespace
}  // namespace portanet
