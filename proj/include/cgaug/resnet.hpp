#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>
#include <torch/torch.h>

#include "cgaug/dataset.hpp"

namespace cgaug {

// ResNet-18 adapted to single-channel spectrograms.
struct ResNetSpec {
  int in_channels = 1;
  int n_classes = 6;
  int base_width = 64;  // channels of the first stage; stages use 1x, 2x, 4x, 8x

  int feature_dim() const { return base_width * 8; }
};

void to_json(nlohmann::json& j, const ResNetSpec& s);
void from_json(const nlohmann::json& j, ResNetSpec& s);

class BasicBlockImpl : public torch::nn::Module {
 public:
  BasicBlockImpl(int in, int out, int stride);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Conv2d conv1{nullptr}, conv2{nullptr};
  torch::nn::BatchNorm2d bn1{nullptr}, bn2{nullptr};
  torch::nn::Sequential downsample{nullptr};
};
TORCH_MODULE(BasicBlock);

class ResNet18Impl : public torch::nn::Module {
 public:
  explicit ResNet18Impl(const ResNetSpec& spec);

  torch::Tensor forward(const torch::Tensor& x);
  // Global-average-pooled output of the last convolutional stage.
  torch::Tensor features(const torch::Tensor& x);

  const ResNetSpec& spec() const { return spec_; }

  torch::nn::Conv2d stem{nullptr};
  torch::nn::BatchNorm2d stem_bn{nullptr};
  torch::nn::Sequential layer1{nullptr}, layer2{nullptr}, layer3{nullptr}, layer4{nullptr};
  torch::nn::Linear fc{nullptr};

 private:
  ResNetSpec spec_;
};
TORCH_MODULE(ResNet18);

struct ClassifierConfig {
  int epochs = 20;
  int batch_size = 32;
  double learning_rate = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.99;
  std::uint64_t seed = 0;
};

void to_json(nlohmann::json& j, const ClassifierConfig& c);
void from_json(const nlohmann::json& j, ClassifierConfig& c);

// (N, 1, H, W) float tensor from spectrograms, and (N,) int64 labels.
torch::Tensor stack_spectrograms(std::span<const MelSpectrogram> items);
torch::Tensor stack_labels(std::span<const MelSpectrogram> items);

// Cross-entropy training with Adam; batch order is seeded per epoch.
// Returns training accuracy after each epoch (measured in eval mode).
std::vector<double> train_classifier(ResNet18& net, const torch::Tensor& inputs, const torch::Tensor& labels,
                                     const ClassifierConfig& config);

// Class predictions in eval mode.
std::vector<int> predict(ResNet18& net, const torch::Tensor& inputs, int batch_size = 64);

// Frozen ResNet-18 exposing pooled last-conv activations.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(ResNet18 net);

  // Rows are samples; columns are feature_dim() pooled channels.
  Eigen::MatrixXd extract(const torch::Tensor& inputs, int batch_size = 128) const;
  int feature_dim() const { return net_->spec().feature_dim(); }
  ResNet18 network() const { return net_; }

  void save(const std::filesystem::path& dir) const;
  static FeatureExtractor load(const std::filesystem::path& dir);

 private:
  ResNet18 net_;
};

// Trains a ResNet-18 on the whole corpus and freezes it.
FeatureExtractor train_feature_extractor(const SpectrogramCorpus& corpus, ResNetSpec spec,
                                         const ClassifierConfig& config,
                                         std::vector<double>* accuracy_history = nullptr);

}  // namespace cgaug
