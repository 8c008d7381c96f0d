#include "portanet/net.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "portanet/config.hpp"
#include "portanet/error.hpp"

namespace portanet {

namespace {

LayerSpec layer_spec_from(const ConfigSection& section) {
  if (section.kind != "layer") {
    throw ConfigError("line " + std::to_string(section.line) + ": unexpected section [" + section.kind +
                      "] in a net description");
  }
  LayerSpec spec;
  ConfigSection params{section.kind, section.line, {}};
  for (const auto& e : section.entries) {
    if (e.key == "name") {
      spec.name = e.value;
    } else if (e.key == "type") {
      spec.type = e.value;
    } else if (e.key == "bottom" || e.key == "top") {
      ConfigSection one{section.kind, section.line, {e}};
      KeyReader reader(one);
      (e.key == "bottom" ? spec.bottoms : spec.tops) = reader.take_list(e.key);
    } else {
      params.entries.push_back(e);
    }
  }
  if (spec.name.empty()) throw ConfigError("line " + std::to_string(section.line) + ": layer without a name");
  if (spec.type.empty()) throw ConfigError("layer '" + spec.name + "': missing type");
  spec.params = std::move(params);
  return spec;
}

}  // namespace

NetSpec NetSpec::parse(std::string_view text) {
  NetSpec spec;
  std::set<std::string> names;
  for (const auto& section : parse_config(text)) {
    spec.layers.push_back(layer_spec_from(section));
    if (!names.insert(spec.layers.back().name).second) {
      throw ConfigError("duplicate layer name '" + spec.layers.back().name + "'");
    }
  }
  if (spec.layers.empty()) throw ConfigError("net description has no layers");
  return spec;
}

NetSpec NetSpec::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open net description " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse(text.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

Blob& Net::blob_or_create(const std::string& name) {
  auto it = blobs_.find(name);
  if (it == blobs_.end()) it = blobs_.emplace(name, std::make_unique<Blob>()).first;
  return *it->second;
}

Net::Net(const NetSpec& spec, std::size_t batch, std::uint64_t seed) {
  if (batch == 0) throw InputError("batch size must be >= 1");
  std::map<std::string, bool, std::less<>> needs_grad;

  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& ls = spec.layers[i];
    auto layer = make_layer(ls);
    if (i == 0) {
      input_ = dynamic_cast<InputLayer*>(layer.get());
      if (input_ == nullptr) throw ConfigError("the first layer must be of type Input");
    } else if (layer->type() == "Input") {
      throw ConfigError("layer '" + ls.name + "': only the first layer may be an Input");
    }

    std::vector<Blob*> bottoms;
    std::vector<bool> propagate;
    bool any_grad = false;
    for (std::size_t b = 0; b < ls.bottoms.size(); ++b) {
      auto it = blobs_.find(ls.bottoms[b]);
      if (it == blobs_.end()) {
        throw ConfigError("layer '" + ls.name + "': bottom blob '" + ls.bottoms[b] + "' is not produced earlier");
      }
      bottoms.push_back(it->second.get());
      const bool p = layer->can_propagate_to(b) && needs_grad[ls.bottoms[b]];
      propagate.push_back(p);
      any_grad = any_grad || p;
    }

    std::vector<Blob*> tops;
    for (std::size_t t = 0; t < ls.tops.size(); ++t) {
      const std::string& name = ls.tops[t];
      if (blobs_.contains(name)) {
        const bool in_place = layer->allows_in_place() && t == 0 && !ls.bottoms.empty() && ls.bottoms[0] == name;
        if (!in_place) throw ConfigError("layer '" + ls.name + "': top blob '" + name + "' already exists");
      }
      tops.push_back(&blob_or_create(name));
    }
    if (layer->type() == "Accuracy" && !accuracy_layer_) accuracy_layer_ = i;

    bottoms_.push_back(std::move(bottoms));
    tops_.push_back(std::move(tops));
    propagate_down_.push_back(std::move(propagate));
    layers_.push_back(std::move(layer));

    // Learnable layers create their parameters during the first reshape.
    if (i == 0) input_->set_batch(batch);
    layers_[i]->reshape(bottoms_[i], tops_[i]);
    any_grad = any_grad || !layers_[i]->params().empty();
    for (const auto& name : ls.tops) needs_grad[name] = i > 0 && any_grad;
  }
  batch_ = batch;

  Rng rng(seed);
  for (auto& layer : layers_) layer->init_params(rng);
}

void Net::reshape(std::size_t batch) {
  if (batch == 0) throw InputError("batch size must be >= 1");
  if (batch == batch_) return;
  input_->set_batch(batch);
  for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i]->reshape(bottoms_[i], tops_[i]);
  batch_ = batch;
}

Shape Net::sample_shape() const { return input_->sample_shape(); }

void Net::set_input(std::span<const float> images, std::span<const int> labels) {
  Blob& data = *tops_[0][0];
  Blob& label = *tops_[0][1];
  if (images.size() != data.count() || labels.size() != label.count()) {
    throw ShapeError("set_input: expected " + std::to_string(data.count()) + " values and " +
                     std::to_string(label.count()) + " labels, got " + std::to_string(images.size()) + " and " +
                     std::to_string(labels.size()));
  }
  std::copy(images.begin(), images.end(), data.data().values().begin());
  std::transform(labels.begin(), labels.end(), label.data().values().begin(),
                 [](int l) { return static_cast<float>(l); });
}

void Net::forward_layer(std::size_t i) {
  if (observer_) observer_(*layers_[i], Pass::forward);
  layers_[i]->forward(bottoms_[i], tops_[i]);
}

void Net::backward_layer(std::size_t i) {
  if (observer_) observer_(*layers_[i], Pass::backward);
  layers_[i]->backward(tops_[i], propagate_down_[i], bottoms_[i]);
}

float Net::forward() {
  float loss = 0.0f;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    forward_layer(i);
    if (const float w = layers_[i]->loss_weight(); w != 0.0f) loss += w * tops_[i][0]->data()[0];
  }
  loss_ = loss;
  return loss;
}

void Net::backward() {
  for (std::size_t i = layers_.size(); i-- > 0;) backward_layer(i);
}

std::vector<Blob*> Net::learnables() {
  std::vector<Blob*> out;
  for (auto& layer : layers_) {
    for (auto& p : layer->params()) out.push_back(&p);
  }
  return out;
}

void Net::zero_param_diffs() {
  for (Blob* b : learnables()) b->zero_diff();
}

bool Net::has_blob(std::string_view name) const { return blobs_.find(name) != blobs_.end(); }

Blob& Net::blob(std::string_view name) {
  auto it = blobs_.find(name);
  if (it == blobs_.end()) throw InputError("no blob named '" + std::string(name) + "'");
  return *it->second;
}

const Blob& Net::blob(std::string_view name) const {
  auto it = blobs_.find(name);
  if (it == blobs_.end()) throw InputError("no blob named '" + std::string(name) + "'");
  return *it->second;
}

std::optional<float> Net::accuracy() const {
  if (!accuracy_layer_) return std::nullopt;
  return tops_[*accuracy_layer_][0]->data()[0];
}

}  // namespace portanet
