#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>
#include <torch/torch.h>

#include "cgaug/dataset.hpp"
#include "cgaug/gan_models.hpp"

namespace cgaug {

struct TrainingConfig {
  double gp_weight = 10.0;
  double learning_rate = 5e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.9;
  int critic_steps_per_generator_step = 5;
  int batch_size = 64;
  int max_epochs = 300;
  int fid_eval_interval = 1;
  int early_stop_patience = 20;  // evaluations without improvement; 0 disables
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainingConfig& c);
void from_json(const nlohmann::json& j, TrainingConfig& c);

// score = critic(x, labels), shape (N,).
using CriticFn = std::function<torch::Tensor(const torch::Tensor&, const torch::Tensor&)>;

// Mean over the batch of (||grad_x critic(x_hat)||_2 - 1)^2 at
// x_hat = eps * real + (1 - eps) * fake, with one eps per sample
// (epsilon has shape (N,)). With create_graph the result is differentiable
// with respect to the critic parameters.
torch::Tensor gradient_penalty(const CriticFn& critic, const torch::Tensor& real, const torch::Tensor& fake,
                               const torch::Tensor& labels, const torch::Tensor& epsilon,
                               bool create_graph = true);

// Draws eps ~ U(0, 1) per sample from a generator seeded with `seed`.
torch::Tensor gradient_penalty(const CriticFn& critic, const torch::Tensor& real, const torch::Tensor& fake,
                               const torch::Tensor& labels, std::uint64_t seed, bool create_graph = true);

// Per-sample gradient norms ||grad_x critic(x)|| (diagnostics).
torch::Tensor critic_gradient_norms(const CriticFn& critic, const torch::Tensor& x, const torch::Tensor& labels);

struct StepLosses {
  double critic_loss = 0.0;
  double generator_loss = 0.0;
  double gradient_penalty = 0.0;
  double critic_grad_norm = 0.0;
  double generator_grad_norm = 0.0;
};

// Owns the generator, critic and their Adam optimizers (single writer).
class WganGpTrainer {
 public:
  WganGpTrainer(const GeneratorSpec& gspec, const CriticSpec& cspec, const TrainingConfig& config);

  // critic_steps_per_generator_step critic updates on this real batch (fresh
  // latents each), then one generator update. Throws NumericalError with a
  // diagnostic snapshot if a loss turns non-finite.
  StepLosses train_step(const torch::Tensor& real, const torch::Tensor& labels);

  // One critic update against the given fake batch; returns (loss, gp).
  std::pair<double, double> critic_step(const torch::Tensor& real, const torch::Tensor& fake,
                                        const torch::Tensor& labels);
  // One generator update; returns the generator loss.
  double generator_step(const torch::Tensor& labels);

  std::int64_t critic_updates() const { return critic_updates_; }
  std::int64_t generator_updates() const { return generator_updates_; }

  Generator& generator() { return generator_; }
  Critic& critic() { return critic_; }
  const TrainingConfig& config() const { return config_; }

  void save_checkpoint(const std::filesystem::path& dir, int epoch, const std::string& config_hash = {}) const;
  // Restores weights, optimizer moments and counters; returns the epoch.
  int load_checkpoint(const std::filesystem::path& dir);

 private:
  torch::Tensor sample_latent(std::int64_t n);

  TrainingConfig config_;
  Generator generator_;
  Critic critic_;
  std::unique_ptr<torch::optim::Adam> gen_opt_;
  std::unique_ptr<torch::optim::Adam> critic_opt_;
  std::int64_t critic_updates_ = 0;
  std::int64_t generator_updates_ = 0;
  StepLosses last_;
};

// Maps a batch of (N, 1, H, W) spectrograms to feature rows.
using FeatureFn = std::function<Eigen::MatrixXd(const torch::Tensor&)>;

struct StepRecord {
  std::int64_t step = 0;
  double critic_loss = 0.0;
  double generator_loss = 0.0;
};

struct TrainingRun {
  TrainingConfig config;
  std::vector<std::pair<int, std::filesystem::path>> checkpoints;
  std::vector<std::pair<int, double>> fid_history;
  std::vector<StepRecord> losses;
  std::int64_t critic_updates = 0;
  std::int64_t generator_updates = 0;

  // Epoch with the lowest FID; throws ValidationError if no FID was recorded.
  int best_epoch() const;
  std::filesystem::path best_checkpoint() const;
};

struct RunOptions {
  std::filesystem::path run_dir;
  bool resume = false;
  std::string config_hash;
  // Called after each FID evaluation (progress reporting).
  std::function<void(int epoch, double fid)> on_evaluation;
};

// Trains on a normalized labeled corpus, writing config.json, events.csv,
// fid.csv and checkpoints/epoch_N/ under run_dir. FID is measured on a
// generated sample whose per-class counts match the corpus.
TrainingRun run_training(const SpectrogramCorpus& corpus, const GeneratorSpec& gspec, const CriticSpec& cspec,
                         const TrainingConfig& config, const FeatureFn& features, const RunOptions& options);

// Reads fid.csv / checkpoints of a finished run directory.
TrainingRun load_training_run(const std::filesystem::path& run_dir);

// Loads only the generator of a checkpoint directory.
Generator load_generator(const std::filesystem::path& checkpoint_dir);

// Exactly class_counts[c] samples of class c, flagged normalized and
// synthetic; deterministic for a fixed seed.
std::vector<MelSpectrogram> generate_samples(Generator& generator, std::span<const int> class_counts,
                                             std::uint64_t seed, const std::string& source_tag = "gan");
std::vector<MelSpectrogram> generate_samples(const std::filesystem::path& checkpoint_dir,
                                             std::span<const int> class_counts, std::uint64_t seed);

}  // namespace cgaug
