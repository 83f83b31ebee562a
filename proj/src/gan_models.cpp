#include "cgaug/gan_models.hpp"

#include <set>

#include <nlohmann/json.hpp>

#include "cgaug/errors.hpp"

namespace cgaug {

namespace nn = torch::nn;
namespace F = torch::nn::functional;
using nlohmann::json;

namespace {

void init_normal(nn::Module& module, double std) {
  torch::NoGradGuard guard;
  for (auto& item : module.named_parameters()) {
    if (item.key().ends_with("bias")) {
      item.value().zero_();
    } else {
      item.value().normal_(0.0, std);
    }
  }
}

void reject_unknown(const json& j, const std::set<std::string>& known, const char* what) {
  for (const auto& [k, v] : j.items()) {
    if (!known.contains(k)) throw ValidationError(std::string(what) + ": unknown key '" + k + "'");
  }
}

}  // namespace

void check_labels(const torch::Tensor& labels, int n_classes) {
  if (labels.dim() != 1) throw ShapeError("labels must be a 1-D tensor");
  if (labels.numel() == 0) return;
  const auto lo = labels.min().item<std::int64_t>();
  const auto hi = labels.max().item<std::int64_t>();
  if (lo < 0 || hi >= n_classes) {
    throw ValidationError("label out of range [0, " + std::to_string(n_classes) + ")");
  }
}

// ---------------------------------------------------------------------------

void SqueezeExcitationSpec::validate() const {
  if (channels <= 0 || reduction <= 0 || channels % reduction != 0) {
    throw ValidationError("SE block: channels (" + std::to_string(channels) +
                          ") must be a positive multiple of reduction (" + std::to_string(reduction) + ")");
  }
}

std::int64_t se_parameter_count(const SqueezeExcitationSpec& spec) {
  const std::int64_t c = spec.channels;
  const std::int64_t h = spec.hidden();
  return 2 * c * h + h + c;
}

torch::Tensor se_gates(const torch::Tensor& features, const torch::Tensor& w1, const torch::Tensor& b1,
                       const torch::Tensor& w2, const torch::Tensor& b2) {
  if (features.dim() != 4) throw ShapeError("se_forward: features must be (N, C, H, W)");
  if (w1.dim() != 2 || w1.size(1) != features.size(1) || w2.dim() != 2 || w2.size(0) != features.size(1) ||
      w2.size(1) != w1.size(0)) {
    throw ShapeError("se_forward: weight shapes do not match the feature channel count");
  }
  const auto squeezed = features.mean({2, 3});
  const auto hidden = torch::relu(torch::addmm(b1, squeezed, w1.t()));
  return torch::sigmoid(torch::addmm(b2, hidden, w2.t()));
}

torch::Tensor se_forward(const torch::Tensor& features, const torch::Tensor& w1, const torch::Tensor& b1,
                         const torch::Tensor& w2, const torch::Tensor& b2) {
  const auto s = se_gates(features, w1, b1, w2, b2);
  return features * s.unsqueeze(-1).unsqueeze(-1);
}

SqueezeExcitationImpl::SqueezeExcitationImpl(const SqueezeExcitationSpec& spec) : spec_(spec) {
  spec_.validate();
  squeeze = register_module("squeeze", nn::Linear(spec_.channels, spec_.hidden()));
  excite = register_module("excite", nn::Linear(spec_.hidden(), spec_.channels));
}

torch::Tensor SqueezeExcitationImpl::gates(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != spec_.channels) {
    throw ShapeError("SE block expects " + std::to_string(spec_.channels) + " channels");
  }
  return se_gates(x, squeeze->weight, squeeze->bias, excite->weight, excite->bias);
}

torch::Tensor SqueezeExcitationImpl::forward(const torch::Tensor& x) {
  return x * gates(x).unsqueeze(-1).unsqueeze(-1);
}

// ---------------------------------------------------------------------------

int GeneratorSpec::initial_size() const {
  return output_size >> (static_cast<int>(block_channels.size()) + 1);
}

void GeneratorSpec::validate() const {
  if (latent_dim <= 0 || n_classes <= 0 || embedding_dim < 0 || initial_channels <= 0) {
    throw ValidationError("generator spec: sizes must be positive");
  }
  if (block_channels.empty()) throw ValidationError("generator spec: need at least one block");
  for (int c : block_channels) {
    if (c <= 0) throw ValidationError("generator spec: block channels must be positive");
  }
  const int s0 = initial_size();
  if (s0 < 1 || (s0 << (block_channels.size() + 1)) != output_size) {
    throw ValidationError("generator spec: output_size must equal initial_size * 2^(blocks + 1)");
  }
  if (se_stage) SqueezeExcitationSpec{se_channels(), se_reduction}.validate();
}

GeneratorSpec GeneratorSpec::baseline() const {
  GeneratorSpec b = *this;
  b.se_stage = false;
  return b;
}

void to_json(json& j, const GeneratorSpec& s) {
  j = json{{"latent_dim", s.latent_dim},         {"n_classes", s.n_classes},
           {"embedding_dim", s.embedding_dim},   {"initial_channels", s.initial_channels},
           {"block_channels", s.block_channels}, {"output_size", s.output_size},
           {"se_reduction", s.se_reduction},     {"se_stage", s.se_stage},
           {"leaky_slope", s.leaky_slope},       {"init_std", s.init_std}};
}

void from_json(const json& j, GeneratorSpec& s) {
  reject_unknown(j,
                 {"latent_dim", "n_classes", "embedding_dim", "initial_channels", "block_channels",
                  "output_size", "se_reduction", "se_stage", "leaky_slope", "init_std"},
                 "generator spec");
  s.latent_dim = j.value("latent_dim", s.latent_dim);
  s.n_classes = j.value("n_classes", s.n_classes);
  s.embedding_dim = j.value("embedding_dim", s.embedding_dim);
  s.initial_channels = j.value("initial_channels", s.initial_channels);
  s.block_channels = j.value("block_channels", s.block_channels);
  s.output_size = j.value("output_size", s.output_size);
  s.se_reduction = j.value("se_reduction", s.se_reduction);
  s.se_stage = j.value("se_stage", s.se_stage);
  s.leaky_slope = j.value("leaky_slope", s.leaky_slope);
  s.init_std = j.value("init_std", s.init_std);
  s.validate();
}

GeneratorImpl::GeneratorImpl(const GeneratorSpec& spec) : spec_(spec) {
  spec_.validate();
  const int s0 = spec_.initial_size();
  if (spec_.embedding_dim > 0) {
    embedding = register_module("embedding", nn::Embedding(spec_.n_classes, spec_.embedding_dim));
  }
  project = register_module(
      "project", nn::Linear(spec_.latent_dim + spec_.embedding_dim, spec_.initial_channels * s0 * s0));
  blocks = register_module("blocks", nn::ModuleList());
  int in = spec_.initial_channels;
  for (int out : spec_.block_channels) {
    blocks->push_back(nn::Conv2d(nn::Conv2dOptions(in, out, 3).padding(1)));
    in = out;
  }
  if (spec_.se_stage) {
    se_conv = register_module("se_conv", nn::Conv2d(nn::Conv2dOptions(in, in, 3).padding(1)));
    se = register_module("se", SqueezeExcitation(SqueezeExcitationSpec{in, spec_.se_reduction}));
  }
  output = register_module("output", nn::Conv2d(nn::Conv2dOptions(in, 1, 3).padding(1)));
  init_normal(*this, spec_.init_std);
}

std::vector<std::string> GeneratorImpl::layer_names() const {
  std::vector<std::string> names{"project"};
  for (std::size_t i = 0; i < spec_.block_channels.size(); ++i) {
    names.push_back("block" + std::to_string(i + 1));
  }
  if (spec_.se_stage) {
    names.push_back("se_conv");
    names.push_back("se_stage");
  }
  names.push_back("output");
  return names;
}

torch::Tensor GeneratorImpl::forward(const torch::Tensor& z, const torch::Tensor& labels,
                                     const ActivationHook& hook) {
  if (z.dim() != 2 || z.size(1) != spec_.latent_dim) {
    throw ShapeError("generator: latent must be (N, " + std::to_string(spec_.latent_dim) + ")");
  }
  if (labels.dim() != 1 || labels.size(0) != z.size(0)) {
    throw ShapeError("generator: labels must be (N,) matching the latent batch");
  }
  check_labels(labels, spec_.n_classes);

  const auto lrelu = F::LeakyReLUFuncOptions().negative_slope(spec_.leaky_slope);
  auto emit = [&](const char* name, const torch::Tensor& t) {
    if (hook) hook(name, t);
  };

  torch::Tensor input = z;
  if (embedding) input = torch::cat({z, embedding->forward(labels)}, 1);
  const int s0 = spec_.initial_size();
  auto x = F::leaky_relu(project->forward(input), lrelu).view({-1, spec_.initial_channels, s0, s0});
  emit("project", x);

  const auto up = F::InterpolateFuncOptions().scale_factor(std::vector<double>{2.0, 2.0}).mode(torch::kNearest);
  for (std::size_t i = 0; i < blocks->size(); ++i) {
    x = F::interpolate(x, up);
    x = F::leaky_relu(blocks[i]->as<nn::Conv2d>()->forward(x), lrelu);
    emit(("block" + std::to_string(i + 1)).c_str(), x);
  }

  if (spec_.se_stage && !bypass_se_) {
    const auto h = F::leaky_relu(se_conv->forward(x), lrelu);
    emit("se_conv", h);
    x = x + se->forward(h);
    emit("se_stage", x);
  }

  x = output->forward(F::interpolate(x, up));
  emit("output", x);
  return x;
}

// ---------------------------------------------------------------------------

int CriticSpec::final_size() const {
  return input_size >> static_cast<int>(conv_channels.size());
}

void CriticSpec::validate() const {
  if (n_classes <= 0 || input_size <= 0 || kernel_size <= 0 || kernel_size % 2 == 0) {
    throw ValidationError("critic spec: sizes must be positive and kernel_size odd");
  }
  if (conv_channels.empty()) throw ValidationError("critic spec: need at least one conv layer");
  if (final_size() < 1 || (final_size() << conv_channels.size()) != input_size) {
    throw ValidationError("critic spec: input_size must be divisible by 2^layers");
  }
}

void to_json(json& j, const CriticSpec& s) {
  j = json{{"n_classes", s.n_classes},     {"input_size", s.input_size},
           {"conv_channels", s.conv_channels}, {"kernel_size", s.kernel_size},
           {"leaky_slope", s.leaky_slope}, {"init_std", s.init_std}};
}

void from_json(const json& j, CriticSpec& s) {
  reject_unknown(j, {"n_classes", "input_size", "conv_channels", "kernel_size", "leaky_slope", "init_std"},
                 "critic spec");
  s.n_classes = j.value("n_classes", s.n_classes);
  s.input_size = j.value("input_size", s.input_size);
  s.conv_channels = j.value("conv_channels", s.conv_channels);
  s.kernel_size = j.value("kernel_size", s.kernel_size);
  s.leaky_slope = j.value("leaky_slope", s.leaky_slope);
  s.init_std = j.value("init_std", s.init_std);
  s.validate();
}

CriticImpl::CriticImpl(const CriticSpec& spec) : spec_(spec) {
  spec_.validate();
  convs = register_module("convs", nn::ModuleList());
  int in = 1 + spec_.n_classes;
  for (int out : spec_.conv_channels) {
    convs->push_back(nn::Conv2d(
        nn::Conv2dOptions(in, out, spec_.kernel_size).stride(2).padding(spec_.kernel_size / 2)));
    in = out;
  }
  head = register_module("head", nn::Conv2d(nn::Conv2dOptions(in, 1, spec_.final_size())));
  init_normal(*this, spec_.init_std);
}

torch::Tensor CriticImpl::forward(const torch::Tensor& x, const torch::Tensor& labels) {
  if (x.dim() != 4 || x.size(1) != 1 || x.size(2) != spec_.input_size || x.size(3) != spec_.input_size) {
    throw ShapeError("critic: input must be (N, 1, " + std::to_string(spec_.input_size) + ", " +
                     std::to_string(spec_.input_size) + ")");
  }
  if (labels.dim() != 1 || labels.size(0) != x.size(0)) {
    throw ShapeError("critic: labels must be (N,) matching the input batch");
  }
  check_labels(labels, spec_.n_classes);
  const auto onehot = F::one_hot(labels, spec_.n_classes)
                          .to(x.dtype())
                          .view({-1, spec_.n_classes, 1, 1})
                          .expand({-1, -1, spec_.input_size, spec_.input_size});
  auto h = torch::cat({x, onehot}, 1);
  const auto lrelu = F::LeakyReLUFuncOptions().negative_slope(spec_.leaky_slope);
  for (const auto& conv : *convs) h = F::leaky_relu(conv->as<nn::Conv2d>()->forward(h), lrelu);
  return head->forward(h).view({-1});
}

std::int64_t count_parameters(const torch::nn::Module& module) {
  std::int64_t n = 0;
  for (const auto& p : module.parameters()) {
    if (p.requires_grad()) n += p.numel();
  }
  return n;
}

}  // namespace cgaug
