#include "cgaug/resnet.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "cgaug/checkpoint.hpp"
#include "cgaug/errors.hpp"
#include "cgaug/seeding.hpp"

namespace cgaug {

namespace nn = torch::nn;
using nlohmann::json;

void to_json(json& j, const ResNetSpec& s) {
  j = json{{"in_channels", s.in_channels}, {"n_classes", s.n_classes}, {"base_width", s.base_width}};
}

void from_json(const json& j, ResNetSpec& s) {
  for (const auto& [k, v] : j.items()) {
    if (k != "in_channels" && k != "n_classes" && k != "base_width") {
      throw ValidationError("resnet spec: unknown key '" + k + "'");
    }
  }
  s.in_channels = j.value("in_channels", s.in_channels);
  s.n_classes = j.value("n_classes", s.n_classes);
  s.base_width = j.value("base_width", s.base_width);
  if (s.in_channels <= 0 || s.n_classes <= 0 || s.base_width <= 0) {
    throw ValidationError("resnet spec: sizes must be positive");
  }
}

void to_json(json& j, const ClassifierConfig& c) {
  j = json{{"epochs", c.epochs}, {"batch_size", c.batch_size}, {"learning_rate", c.learning_rate},
           {"beta1", c.beta1},   {"beta2", c.beta2},           {"seed", c.seed}};
}

void from_json(const json& j, ClassifierConfig& c) {
  static const std::set<std::string> known = {"epochs", "batch_size", "learning_rate", "beta1", "beta2", "seed"};
  for (const auto& [k, v] : j.items()) {
    if (!known.contains(k)) throw ValidationError("classifier config: unknown key '" + k + "'");
  }
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.seed = j.value("seed", c.seed);
  if (c.epochs < 0 || c.batch_size < 1 || !(c.learning_rate > 0.0)) {
    throw ValidationError("classifier config: epochs >= 0, batch_size >= 1, learning_rate > 0 required");
  }
}

// ---------------------------------------------------------------------------

BasicBlockImpl::BasicBlockImpl(int in, int out, int stride) {
  conv1 = register_module("conv1", nn::Conv2d(nn::Conv2dOptions(in, out, 3).stride(stride).padding(1).bias(false)));
  bn1 = register_module("bn1", nn::BatchNorm2d(out));
  conv2 = register_module("conv2", nn::Conv2d(nn::Conv2dOptions(out, out, 3).padding(1).bias(false)));
  bn2 = register_module("bn2", nn::BatchNorm2d(out));
  if (stride != 1 || in != out) {
    downsample = register_module(
        "downsample", nn::Sequential(nn::Conv2d(nn::Conv2dOptions(in, out, 1).stride(stride).bias(false)),
                                     nn::BatchNorm2d(out)));
  }
}

torch::Tensor BasicBlockImpl::forward(const torch::Tensor& x) {
  auto h = torch::relu(bn1(conv1(x)));
  h = bn2(conv2(h));
  const auto skip = downsample ? downsample->forward(x) : x;
  return torch::relu(h + skip);
}

namespace {
nn::Sequential make_stage(int in, int out, int stride) {
  return nn::Sequential(BasicBlock(in, out, stride), BasicBlock(out, out, 1));
}
}  // namespace

ResNet18Impl::ResNet18Impl(const ResNetSpec& spec) : spec_(spec) {
  const int w = spec_.base_width;
  stem = register_module("stem", nn::Conv2d(nn::Conv2dOptions(spec_.in_channels, w, 7).stride(2).padding(3).bias(false)));
  stem_bn = register_module("stem_bn", nn::BatchNorm2d(w));
  layer1 = register_module("layer1", make_stage(w, w, 1));
  layer2 = register_module("layer2", make_stage(w, 2 * w, 2));
  layer3 = register_module("layer3", make_stage(2 * w, 4 * w, 2));
  layer4 = register_module("layer4", make_stage(4 * w, 8 * w, 2));
  fc = register_module("fc", nn::Linear(8 * w, spec_.n_classes));

  torch::NoGradGuard guard;
  for (auto& m : modules(/*include_self=*/false)) {
    if (auto* conv = m->as<nn::Conv2d>()) {
      nn::init::kaiming_normal_(conv->weight, 0.0, torch::kFanOut, torch::kReLU);
    }
  }
}

torch::Tensor ResNet18Impl::features(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != spec_.in_channels) {
    throw ShapeError("resnet: input must be (N, " + std::to_string(spec_.in_channels) + ", H, W)");
  }
  auto h = torch::relu(stem_bn(stem(x)));
  h = torch::max_pool2d(h, 3, 2, 1);
  h = layer4->forward(layer3->forward(layer2->forward(layer1->forward(h))));
  return h.mean({2, 3});
}

torch::Tensor ResNet18Impl::forward(const torch::Tensor& x) { return fc(features(x)); }

// ---------------------------------------------------------------------------

torch::Tensor stack_spectrograms(std::span<const MelSpectrogram> items) {
  if (items.empty()) return torch::empty({0, 1, 0, 0});
  const int h = items.front().n_mels;
  const int w = items.front().n_frames;
  auto out = torch::empty({static_cast<std::int64_t>(items.size()), 1, h, w});
  float* dst = out.data_ptr<float>();
  for (const auto& s : items) {
    if (s.n_mels != h || s.n_frames != w) throw ShapeError("stack_spectrograms: inconsistent shapes");
    dst = std::copy(s.values.begin(), s.values.end(), dst);
  }
  return out;
}

torch::Tensor stack_labels(std::span<const MelSpectrogram> items) {
  auto out = torch::empty({static_cast<std::int64_t>(items.size())}, torch::kInt64);
  auto* dst = out.data_ptr<std::int64_t>();
  for (const auto& s : items) *dst++ = s.label;
  return out;
}

std::vector<int> predict(ResNet18& net, const torch::Tensor& inputs, int batch_size) {
  torch::NoGradGuard guard;
  net->eval();
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(inputs.size(0)));
  for (std::int64_t i = 0; i < inputs.size(0); i += batch_size) {
    const auto logits = net->forward(inputs.slice(0, i, std::min<std::int64_t>(i + batch_size, inputs.size(0))));
    const auto pred = logits.argmax(1);
    for (std::int64_t k = 0; k < pred.size(0); ++k) out.push_back(static_cast<int>(pred[k].item<std::int64_t>()));
  }
  return out;
}

std::vector<double> train_classifier(ResNet18& net, const torch::Tensor& inputs, const torch::Tensor& labels,
                                     const ClassifierConfig& config) {
  const auto n = inputs.size(0);
  if (n == 0) throw ValidationError("train_classifier: empty training set");
  torch::optim::Adam optimizer(net->parameters(), torch::optim::AdamOptions(config.learning_rate)
                                                      .betas({config.beta1, config.beta2}));
  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> history;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    net->train();
    std::mt19937_64 rng(derive_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    const auto perm = torch::tensor(order, torch::kInt64);
    for (std::int64_t i = 0; i < n; i += config.batch_size) {
      const auto idx = perm.slice(0, i, std::min<std::int64_t>(i + config.batch_size, n));
      // BatchNorm needs more than one value per channel in training mode.
      if (idx.size(0) < 2) continue;
      optimizer.zero_grad();
      const auto loss = torch::nn::functional::cross_entropy(net->forward(inputs.index_select(0, idx)),
                                                             labels.index_select(0, idx));
      if (!std::isfinite(loss.item<double>())) throw NumericalError("train_classifier: non-finite loss");
      loss.backward();
      optimizer.step();
    }
    const auto pred = predict(net, inputs);
    std::int64_t correct = 0;
    const auto* lab = labels.data_ptr<std::int64_t>();
    for (std::int64_t i = 0; i < n; ++i) correct += pred[static_cast<std::size_t>(i)] == lab[i];
    history.push_back(static_cast<double>(correct) / static_cast<double>(n));
  }
  net->eval();
  return history;
}

// ---------------------------------------------------------------------------

FeatureExtractor::FeatureExtractor(ResNet18 net) : net_(std::move(net)) {
  net_->eval();
  for (auto& p : net_->parameters()) p.set_requires_grad(false);
}

Eigen::MatrixXd FeatureExtractor::extract(const torch::Tensor& inputs, int batch_size) const {
  torch::NoGradGuard guard;
  auto net = net_.ptr();
  net->eval();
  const auto n = inputs.size(0);
  Eigen::MatrixXd out(n, feature_dim());
  for (std::int64_t i = 0; i < n; i += batch_size) {
    const auto f = net->features(inputs.slice(0, i, std::min<std::int64_t>(i + batch_size, n)))
                       .to(torch::kFloat64)
                       .contiguous();
    const double* p = f.data_ptr<double>();
    for (std::int64_t r = 0; r < f.size(0); ++r) {
      for (std::int64_t c = 0; c < f.size(1); ++c) out(i + r, c) = p[r * f.size(1) + c];
    }
  }
  return out;
}

void FeatureExtractor::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::ofstream arch(dir / "architecture.json");
  if (!arch) throw IoError("cannot write " + (dir / "architecture.json").string());
  arch << json{{"kind", "resnet18_feature_extractor"}, {"spec", net_->spec()}}.dump(2) << '\n';
  save_module(*net_, dir / "weights.bin");
}

FeatureExtractor FeatureExtractor::load(const std::filesystem::path& dir) {
  std::ifstream arch(dir / "architecture.json");
  if (!arch) throw IoError("feature extractor not found: " + (dir / "architecture.json").string());
  json j;
  try {
    arch >> j;
  } catch (const json::parse_error& e) {
    throw ValidationError("feature extractor architecture: " + std::string(e.what()));
  }
  ResNet18 net(j.at("spec").get<ResNetSpec>());
  load_module(*net, dir / "weights.bin");
  return FeatureExtractor(std::move(net));
}

FeatureExtractor train_feature_extractor(const SpectrogramCorpus& corpus, ResNetSpec spec,
                                         const ClassifierConfig& config, std::vector<double>* accuracy_history) {
  const auto counts = corpus.per_class_counts();
  const auto present = std::count_if(counts.begin(), counts.end(), [](int c) { return c > 0; });
  if (present < 2) throw ValidationError("train_feature_extractor: need at least 2 classes with samples");
  spec.n_classes = static_cast<int>(corpus.classes.size());
  torch::manual_seed(config.seed);
  ResNet18 net(spec);
  const auto history =
      train_classifier(net, stack_spectrograms(corpus.items), stack_labels(corpus.items), config);
  if (accuracy_history) *accuracy_history = history;
  return FeatureExtractor(std::move(net));
}

}  // namespace cgaug
