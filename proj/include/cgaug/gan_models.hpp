#pragma once

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>
#include <torch/torch.h>

namespace cgaug {

// Receives (layer name, activation) during a forward pass. Activations are
// NCHW; the callback must not modify them.
using ActivationHook = std::function<void(const std::string&, const torch::Tensor&)>;

// ---------------------------------------------------------------------------
// Squeeze-and-Excitation

struct SqueezeExcitationSpec {
  int channels = 64;
  int reduction = 16;

  int hidden() const { return channels / reduction; }
  void validate() const;
};

// Channel gates s = sigmoid(W2 relu(W1 z + b1) + b2), where z is the spatial
// mean of each channel. Returns (N, C).
torch::Tensor se_gates(const torch::Tensor& features, const torch::Tensor& w1, const torch::Tensor& b1,
                       const torch::Tensor& w2, const torch::Tensor& b2);

// features * gates broadcast over H, W. features is (N, C, H, W); w1 is
// (C/r, C), w2 is (C, C/r).
torch::Tensor se_forward(const torch::Tensor& features, const torch::Tensor& w1, const torch::Tensor& b1,
                         const torch::Tensor& w2, const torch::Tensor& b2);

class SqueezeExcitationImpl : public torch::nn::Module {
 public:
  explicit SqueezeExcitationImpl(const SqueezeExcitationSpec& spec);

  torch::Tensor forward(const torch::Tensor& x);
  torch::Tensor gates(const torch::Tensor& x);

  torch::nn::Linear squeeze{nullptr};  // W1, b1
  torch::nn::Linear excite{nullptr};   // W2, b2

 private:
  SqueezeExcitationSpec spec_;
};
TORCH_MODULE(SqueezeExcitation);

// ---------------------------------------------------------------------------
// Generator

struct GeneratorSpec {
  int latent_dim = 128;
  int n_classes = 6;
  int embedding_dim = 16;
  int initial_channels = 256;
  std::vector<int> block_channels = {256, 192, 128, 64};
  int output_size = 64;
  int se_reduction = 16;
  bool se_stage = true;  // false gives the fully convolutional baseline
  double leaky_slope = 0.2;
  double init_std = 0.02;

  int initial_size() const;
  int se_channels() const { return block_channels.back(); }
  void validate() const;
  GeneratorSpec baseline() const;
};

void to_json(nlohmann::json& j, const GeneratorSpec& s);
void from_json(const nlohmann::json& j, GeneratorSpec& s);

// Label embedding concatenated to the latent, a dense projection to a small
// feature map, nearest-neighbour x2 upsampling blocks with 3x3 convs, an
// optional residual conv + SE stage, and an upsampling linear output conv.
class GeneratorImpl : public torch::nn::Module {
 public:
  explicit GeneratorImpl(const GeneratorSpec& spec);

  // z: (N, latent_dim); labels: (N,) int64. Returns (N, 1, S, S).
  torch::Tensor forward(const torch::Tensor& z, const torch::Tensor& labels,
                        const ActivationHook& hook = nullptr);

  const GeneratorSpec& spec() const { return spec_; }
  std::vector<std::string> layer_names() const;

  // Replaces the SE stage by the identity map (testing aid).
  void set_se_stage_bypass(bool bypass) { bypass_se_ = bypass; }

  torch::nn::Embedding embedding{nullptr};
  torch::nn::Linear project{nullptr};
  torch::nn::ModuleList blocks{nullptr};
  torch::nn::Conv2d se_conv{nullptr};
  SqueezeExcitation se{nullptr};
  torch::nn::Conv2d output{nullptr};

 private:
  GeneratorSpec spec_;
  bool bypass_se_ = false;
};
TORCH_MODULE(Generator);

// ---------------------------------------------------------------------------
// Critic

struct CriticSpec {
  int n_classes = 6;
  int input_size = 64;
  std::vector<int> conv_channels = {64, 128, 256, 512};
  int kernel_size = 5;
  double leaky_slope = 0.2;
  double init_std = 0.02;

  int final_size() const;
  void validate() const;
};

void to_json(nlohmann::json& j, const CriticSpec& s);
void from_json(const nlohmann::json& j, CriticSpec& s);

// Fully convolutional: the one-hot label is broadcast as K extra input
// channels, stride-2 convs halve the resolution, and a final valid conv
// covering the remaining map yields one unbounded score.
class CriticImpl : public torch::nn::Module {
 public:
  explicit CriticImpl(const CriticSpec& spec);

  // x: (N, 1, S, S); labels: (N,) int64. Returns (N,).
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& labels);

  const CriticSpec& spec() const { return spec_; }

  torch::nn::ModuleList convs{nullptr};
  torch::nn::Conv2d head{nullptr};

 private:
  CriticSpec spec_;
};
TORCH_MODULE(Critic);

// Trainable scalar count.
std::int64_t count_parameters(const torch::nn::Module& module);

// Closed-form count of an SE block with biases: 2C^2/r + C/r + C.
std::int64_t se_parameter_count(const SqueezeExcitationSpec& spec);

// Throws ValidationError if any label lies outside [0, n_classes).
void check_labels(const torch::Tensor& labels, int n_classes);

}  // namespace cgaug
