#include "cgaug/gan_training.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <regex>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cgaug/checkpoint.hpp"
#include "cgaug/errors.hpp"
#include "cgaug/fid.hpp"
#include "cgaug/log.hpp"
#include "cgaug/resnet.hpp"
#include "cgaug/seeding.hpp"

namespace cgaug {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Config

void TrainingConfig::validate() const {
  if (!(gp_weight >= 0.0)) throw ValidationError("training config: gp_weight must be >= 0");
  if (!(learning_rate > 0.0)) throw ValidationError("training config: learning_rate must be > 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ValidationError("training config: Adam betas must lie in [0, 1)");
  }
  if (critic_steps_per_generator_step < 1) throw ValidationError("training config: critic steps must be >= 1");
  if (batch_size < 2) throw ValidationError("training config: batch_size must be >= 2");
  if (max_epochs < 1) throw ValidationError("training config: max_epochs must be >= 1");
  if (fid_eval_interval < 1) throw ValidationError("training config: fid_eval_interval must be >= 1");
  if (early_stop_patience < 0) throw ValidationError("training config: early_stop_patience must be >= 0");
}

void to_json(json& j, const TrainingConfig& c) {
  j = json{{"gp_weight", c.gp_weight},
           {"learning_rate", c.learning_rate},
           {"adam_beta1", c.adam_beta1},
           {"adam_beta2", c.adam_beta2},
           {"critic_steps_per_generator_step", c.critic_steps_per_generator_step},
           {"batch_size", c.batch_size},
           {"max_epochs", c.max_epochs},
           {"fid_eval_interval", c.fid_eval_interval},
           {"early_stop_patience", c.early_stop_patience},
           {"seed", c.seed}};
}

void from_json(const json& j, TrainingConfig& c) {
  static const std::set<std::string> known = {"gp_weight", "learning_rate", "adam_beta1", "adam_beta2",
                                              "critic_steps_per_generator_step", "batch_size", "max_epochs",
                                              "fid_eval_interval", "early_stop_patience", "seed"};
  for (const auto& [k, v] : j.items()) {
    if (!known.contains(k)) throw ValidationError("training config: unknown key '" + k + "'");
  }
  c.gp_weight = j.value("gp_weight", c.gp_weight);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
  c.critic_steps_per_generator_step = j.value("critic_steps_per_generator_step", c.critic_steps_per_generator_step);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.fid_eval_interval = j.value("fid_eval_interval", c.fid_eval_interval);
  c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
  c.seed = j.value("seed", c.seed);
  c.validate();
}

// ---------------------------------------------------------------------------
// Gradient penalty

torch::Tensor gradient_penalty(const CriticFn& critic, const torch::Tensor& real, const torch::Tensor& fake,
                               const torch::Tensor& labels, const torch::Tensor& epsilon, bool create_graph) {
  if (real.sizes() != fake.sizes()) throw ShapeError("gradient_penalty: real and fake batches differ in shape");
  if (real.dim() < 2 || real.size(0) < 1) throw ShapeError("gradient_penalty: need a non-empty batch");
  if (labels.dim() != 1 || labels.size(0) != real.size(0)) {
    throw ShapeError("gradient_penalty: labels must be (N,)");
  }
  if (epsilon.dim() != 1 || epsilon.size(0) != real.size(0)) {
    throw ShapeError("gradient_penalty: epsilon must be (N,)");
  }
  std::vector<std::int64_t> bshape(static_cast<std::size_t>(real.dim()), 1);
  bshape[0] = real.size(0);
  const auto eps = epsilon.to(real.dtype()).view(bshape);
  auto x_hat = (eps * real.detach() + (1 - eps) * fake.detach()).requires_grad_(true);
  const auto scores = critic(x_hat, labels);
  const auto grads = torch::autograd::grad({scores.sum()}, {x_hat}, {}, create_graph, create_graph)[0];
  const auto norms = grads.flatten(1).norm(2, 1);
  return (norms - 1).pow(2).mean();
}

torch::Tensor gradient_penalty(const CriticFn& critic, const torch::Tensor& real, const torch::Tensor& fake,
                               const torch::Tensor& labels, std::uint64_t seed, bool create_graph) {
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  const auto eps = torch::rand({real.size(0)}, gen, torch::TensorOptions().dtype(real.dtype()));
  return gradient_penalty(critic, real, fake, labels, eps, create_graph);
}

torch::Tensor critic_gradient_norms(const CriticFn& critic, const torch::Tensor& x, const torch::Tensor& labels) {
  auto input = x.detach().clone().requires_grad_(true);
  const auto scores = critic(input, labels);
  const auto grads = torch::autograd::grad({scores.sum()}, {input})[0];
  return grads.flatten(1).norm(2, 1).detach();
}

// ---------------------------------------------------------------------------
// Trainer

namespace {

double grad_norm(const std::vector<torch::Tensor>& params) {
  double acc = 0.0;
  for (const auto& p : params) {
    if (p.grad().defined()) acc += p.grad().pow(2).sum().item<double>();
  }
  return std::sqrt(acc);
}

at::Generator& latent_rng() {
  // One stream per thread; the trainer reseeds it explicitly.
  thread_local at::Generator gen = at::make_generator<at::CPUGeneratorImpl>(0);
  return gen;
}

void set_requires_grad(torch::nn::Module& m, bool flag) {
  for (auto& p : m.parameters()) p.set_requires_grad(flag);
}

}  // namespace

WganGpTrainer::WganGpTrainer(const GeneratorSpec& gspec, const CriticSpec& cspec, const TrainingConfig& config)
    : config_(config), generator_(nullptr), critic_(nullptr) {
  config_.validate();
  if (gspec.n_classes != cspec.n_classes || gspec.output_size != cspec.input_size) {
    throw ValidationError("generator and critic specs disagree on classes or spatial size");
  }
  torch::manual_seed(config_.seed);
  generator_ = Generator(gspec);
  critic_ = Critic(cspec);
  const auto opts = torch::optim::AdamOptions(config_.learning_rate).betas({config_.adam_beta1, config_.adam_beta2});
  gen_opt_ = std::make_unique<torch::optim::Adam>(generator_->parameters(), opts);
  critic_opt_ = std::make_unique<torch::optim::Adam>(critic_->parameters(), opts);
  latent_rng().set_current_seed(derive_seed(config_.seed, 0x1A7E));
}

torch::Tensor WganGpTrainer::sample_latent(std::int64_t n) {
  return torch::randn({n, generator_->spec().latent_dim}, latent_rng());
}

std::pair<double, double> WganGpTrainer::critic_step(const torch::Tensor& real, const torch::Tensor& fake,
                                                     const torch::Tensor& labels) {
  critic_->train();
  set_requires_grad(*critic_, true);
  critic_opt_->zero_grad();
  auto critic_fn = [this](const torch::Tensor& x, const torch::Tensor& y) { return critic_->forward(x, y); };
  const auto d_real = critic_->forward(real, labels).mean();
  const auto d_fake = critic_->forward(fake.detach(), labels).mean();
  auto loss = d_fake - d_real;
  double gp_value = 0.0;
  if (config_.gp_weight > 0.0) {
    const auto eps = torch::rand({real.size(0)}, latent_rng());
    const auto gp = gradient_penalty(critic_fn, real, fake, labels, eps, /*create_graph=*/true);
    gp_value = gp.item<double>();
    loss = loss + config_.gp_weight * gp;
  }
  loss.backward();
  last_.critic_grad_norm = grad_norm(critic_->parameters());
  const double value = loss.item<double>();
  if (!std::isfinite(value) || !std::isfinite(last_.critic_grad_norm)) {
    std::ostringstream msg;
    msg << "non-finite critic loss at critic update " << critic_updates_ << " (loss " << value << ", gp "
        << gp_value << ", critic grad norm " << last_.critic_grad_norm << "; previous critic loss "
        << last_.critic_loss << ", generator loss " << last_.generator_loss << ", generator grad norm "
        << last_.generator_grad_norm << ")";
    throw NumericalError(msg.str());
  }
  critic_opt_->step();
  ++critic_updates_;
  last_.critic_loss = value;
  last_.gradient_penalty = gp_value;
  return {value, gp_value};
}

double WganGpTrainer::generator_step(const torch::Tensor& labels) {
  generator_->train();
  set_requires_grad(*critic_, false);
  gen_opt_->zero_grad();
  const auto fake = generator_->forward(sample_latent(labels.size(0)), labels);
  const auto loss = -critic_->forward(fake, labels).mean();
  loss.backward();
  set_requires_grad(*critic_, true);
  last_.generator_grad_norm = grad_norm(generator_->parameters());
  const double value = loss.item<double>();
  if (!std::isfinite(value) || !std::isfinite(last_.generator_grad_norm)) {
    std::ostringstream msg;
    msg << "non-finite generator loss at generator update " << generator_updates_ << " (loss " << value
        << ", generator grad norm " << last_.generator_grad_norm << "; last critic loss " << last_.critic_loss
        << ", gp " << last_.gradient_penalty << ", critic grad norm " << last_.critic_grad_norm << ")";
    throw NumericalError(msg.str());
  }
  gen_opt_->step();
  ++generator_updates_;
  last_.generator_loss = value;
  return value;
}

StepLosses WganGpTrainer::train_step(const torch::Tensor& real, const torch::Tensor& labels) {
  if (real.dim() != 4 || labels.dim() != 1 || real.size(0) != labels.size(0)) {
    throw ShapeError("train_step: real batch (N, 1, H, W) and labels (N,) must align");
  }
  for (int i = 0; i < config_.critic_steps_per_generator_step; ++i) {
    torch::Tensor fake;
    {
      torch::NoGradGuard guard;
      fake = generator_->forward(sample_latent(real.size(0)), labels);
    }
    critic_step(real, fake, labels);
  }
  generator_step(labels);
  return last_;
}

void WganGpTrainer::save_checkpoint(const fs::path& dir, int epoch, const std::string& config_hash) const {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create checkpoint directory " + dir.string() + ": " + ec.message());
  const json arch{{"kind", "cgaug-gan-checkpoint"},
                  {"epoch", epoch},
                  {"generator", generator_->spec()},
                  {"critic", critic_->spec()},
                  {"training", config_},
                  {"critic_updates", critic_updates_},
                  {"generator_updates", generator_updates_},
                  {"config_hash", config_hash}};
  std::ofstream out(dir / "architecture.json");
  if (!out) throw IoError("cannot write " + (dir / "architecture.json").string());
  out << arch.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + (dir / "architecture.json").string());
  save_module(*generator_, dir / "generator.bin");
  save_module(*critic_, dir / "critic.bin");
  try {
    torch::save(*gen_opt_, (dir / "optimizer_generator.pt").string());
    torch::save(*critic_opt_, (dir / "optimizer_critic.pt").string());
  } catch (const c10::Error& e) {
    throw IoError("cannot write optimizer state in " + dir.string() + ": " + e.what_without_backtrace());
  }
}

int WganGpTrainer::load_checkpoint(const fs::path& dir) {
  std::ifstream in(dir / "architecture.json");
  if (!in) throw IoError("checkpoint not found: " + (dir / "architecture.json").string());
  json arch;
  in >> arch;
  load_module(*generator_, dir / "generator.bin");
  load_module(*critic_, dir / "critic.bin");
  if (fs::exists(dir / "optimizer_generator.pt")) torch::load(*gen_opt_, (dir / "optimizer_generator.pt").string());
  if (fs::exists(dir / "optimizer_critic.pt")) torch::load(*critic_opt_, (dir / "optimizer_critic.pt").string());
  critic_updates_ = arch.value("critic_updates", std::int64_t{0});
  generator_updates_ = arch.value("generator_updates", std::int64_t{0});
  return arch.at("epoch").get<int>();
}

// ---------------------------------------------------------------------------
// Runs

int TrainingRun::best_epoch() const {
  if (fid_history.empty()) throw ValidationError("training run has no FID evaluations");
  const auto it = std::min_element(fid_history.begin(), fid_history.end(),
                                   [](const auto& a, const auto& b) { return a.second < b.second; });
  return it->first;
}

fs::path TrainingRun::best_checkpoint() const {
  const int epoch = best_epoch();
  for (const auto& [e, path] : checkpoints) {
    if (e == epoch) return path;
  }
  throw ValidationError("no checkpoint stored for best epoch " + std::to_string(epoch));
}

namespace {

fs::path checkpoint_dir(const fs::path& run_dir, int epoch) {
  return run_dir / "checkpoints" / ("epoch_" + std::to_string(epoch));
}

std::vector<std::pair<int, fs::path>> list_checkpoints(const fs::path& run_dir) {
  std::vector<std::pair<int, fs::path>> out;
  const fs::path root = run_dir / "checkpoints";
  if (!fs::exists(root)) return out;
  static const std::regex pattern(R"(epoch_(\d+))");
  for (const auto& d : fs::directory_iterator(root)) {
    std::smatch m;
    const std::string name = d.path().filename().string();
    if (d.is_directory() && std::regex_match(name, m, pattern)) out.emplace_back(std::stoi(m[1]), d.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

template <typename Row>
void read_csv(const fs::path& path, Row&& row) {
  std::ifstream in(path);
  if (!in) return;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (!line.empty()) row(line);
  }
}

Eigen::MatrixXd features_of(const FeatureFn& features, std::span<const MelSpectrogram> items) {
  return features(stack_spectrograms(items));
}

}  // namespace

TrainingRun load_training_run(const fs::path& run_dir) {
  if (!fs::exists(run_dir)) throw IoError("run directory not found: " + run_dir.string());
  TrainingRun run;
  if (std::ifstream cfg(run_dir / "config.json"); cfg) {
    json j;
    cfg >> j;
    if (j.contains("training")) run.config = j.at("training").get<TrainingConfig>();
  }
  read_csv(run_dir / "fid.csv", [&](const std::string& line) {
    const auto comma = line.find(',');
    run.fid_history.emplace_back(std::stoi(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
  });
  read_csv(run_dir / "events.csv", [&](const std::string& line) {
    std::istringstream s(line);
    StepRecord r;
    char c1 = 0, c2 = 0;
    s >> r.step >> c1 >> r.critic_loss >> c2 >> r.generator_loss;
    run.losses.push_back(r);
  });
  run.checkpoints = list_checkpoints(run_dir);
  return run;
}

Generator load_generator(const fs::path& checkpoint) {
  std::ifstream in(checkpoint / "architecture.json");
  if (!in) throw IoError("checkpoint not found: " + (checkpoint / "architecture.json").string());
  json arch;
  try {
    in >> arch;
  } catch (const json::parse_error& e) {
    throw ValidationError("checkpoint architecture: " + std::string(e.what()));
  }
  Generator g(arch.at("generator").get<GeneratorSpec>());
  load_module(*g, checkpoint / "generator.bin");
  g->eval();
  return g;
}

std::vector<MelSpectrogram> generate_samples(Generator& generator, std::span<const int> class_counts,
                                             std::uint64_t seed, const std::string& source_tag) {
  const auto& spec = generator->spec();
  if (static_cast<int>(class_counts.size()) > spec.n_classes) {
    throw ValidationError("generate_samples: " + std::to_string(class_counts.size()) +
                          " class counts for a generator with " + std::to_string(spec.n_classes) + " classes");
  }
  std::vector<std::int64_t> labels;
  for (std::size_t c = 0; c < class_counts.size(); ++c) {
    if (class_counts[c] < 0) throw ValidationError("generate_samples: negative class count");
    labels.insert(labels.end(), static_cast<std::size_t>(class_counts[c]), static_cast<std::int64_t>(c));
  }
  std::vector<MelSpectrogram> out;
  if (labels.empty()) return out;
  out.reserve(labels.size());

  torch::NoGradGuard guard;
  generator->eval();
  auto rng = at::make_generator<at::CPUGeneratorImpl>(seed);
  const auto all_labels = torch::tensor(labels, torch::kInt64);
  const auto n = static_cast<std::int64_t>(labels.size());
  const auto z_all = torch::randn({n, spec.latent_dim}, rng);
  constexpr std::int64_t kBatch = 256;
  for (std::int64_t i = 0; i < n; i += kBatch) {
    const auto end = std::min(i + kBatch, n);
    const auto images = generator->forward(z_all.slice(0, i, end), all_labels.slice(0, i, end)).contiguous();
    const float* p = images.data_ptr<float>();
    const auto cells = images.size(2) * images.size(3);
    for (std::int64_t k = 0; k < images.size(0); ++k) {
      MelSpectrogram s;
      s.n_mels = static_cast<int>(images.size(2));
      s.n_frames = static_cast<int>(images.size(3));
      s.values.assign(p + k * cells, p + (k + 1) * cells);
      s.label = static_cast<int>(labels[static_cast<std::size_t>(i + k)]);
      s.normalized = true;
      s.synthetic = true;
      s.source_id = source_tag;
      s.window_index = static_cast<int>(i + k);
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<MelSpectrogram> generate_samples(const fs::path& checkpoint, std::span<const int> class_counts,
                                             std::uint64_t seed) {
  auto g = load_generator(checkpoint);
  return generate_samples(g, class_counts, seed, "gan:" + checkpoint.string());
}

TrainingRun run_training(const SpectrogramCorpus& corpus, const GeneratorSpec& gspec, const CriticSpec& cspec,
                         const TrainingConfig& config, const FeatureFn& features, const RunOptions& options) {
  config.validate();
  if (corpus.items.empty()) throw ValidationError("run_training: corpus is empty");
  for (const auto& s : corpus.items) {
    if (!s.normalized) throw ValidationError("run_training: corpus must be normalized");
    if (s.n_mels != gspec.output_size || s.n_frames != gspec.output_size) {
      throw ShapeError("run_training: corpus items are " + std::to_string(s.n_mels) + "x" +
                       std::to_string(s.n_frames) + " but the generator emits " +
                       std::to_string(gspec.output_size) + "x" + std::to_string(gspec.output_size));
    }
    if (s.label < 0 || s.label >= gspec.n_classes) throw ValidationError("run_training: label out of range");
  }
  if (!features) throw ValidationError("run_training: a feature extractor is required for FID");

  const fs::path& dir = options.run_dir;
  std::error_code ec;
  fs::create_directories(dir / "checkpoints", ec);
  if (ec) throw IoError("cannot create run directory " + dir.string() + ": " + ec.message());

  WganGpTrainer trainer(gspec, cspec, config);
  TrainingRun run;
  run.config = config;
  int start_epoch = 1;
  if (options.resume) {
    run = load_training_run(dir);
    run.config = config;
    if (!run.checkpoints.empty()) {
      start_epoch = trainer.load_checkpoint(run.checkpoints.back().second) + 1;
      // Drop history past the restored checkpoint.
      const int last = start_epoch - 1;
      std::erase_if(run.fid_history, [last](const auto& f) { return f.first > last; });
    }
  }

  const json resolved{{"training", config}, {"generator", gspec}, {"critic", cspec},
                      {"config_hash", options.config_hash}};
  {
    std::ofstream cfg(dir / "config.json");
    if (!cfg) throw IoError("cannot write " + (dir / "config.json").string());
    cfg << resolved.dump(2) << '\n';
  }
  const auto mode = options.resume ? std::ios::app : std::ios::trunc;
  std::ofstream events(dir / "events.csv", std::ios::out | mode);
  std::ofstream fid_csv(dir / "fid.csv", std::ios::out | mode);
  if (!events || !fid_csv) throw IoError("cannot write run logs in " + dir.string());
  if (!options.resume || run.losses.empty()) events << "step,critic_loss,gen_loss\n";
  if (!options.resume || run.fid_history.empty()) fid_csv << "epoch,fid\n";
  events.precision(9);
  fid_csv.precision(12);

  const auto real = stack_spectrograms(corpus.items);
  const auto real_labels = stack_labels(corpus.items);
  const Eigen::MatrixXd real_features = features(real);
  auto counts = corpus.per_class_counts();
  counts.resize(static_cast<std::size_t>(gspec.n_classes), 0);
  const std::uint64_t eval_seed = derive_seed(config.seed, 0xF1D);

  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  for (const auto& [e, f] : run.fid_history) {
    if (f < best) {
      best = f;
      since_best = 0;
    } else {
      ++since_best;
    }
  }

  const auto n = real.size(0);
  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  std::int64_t step = run.losses.empty() ? 0 : run.losses.back().step;
  for (int epoch = start_epoch; epoch <= config.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 shuffle_rng(derive_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    latent_rng().set_current_seed(derive_seed(config.seed ^ 0x5EED, static_cast<std::uint64_t>(epoch)));
    const auto perm = torch::tensor(order, torch::kInt64);
    for (std::int64_t i = 0; i < n; i += config.batch_size) {
      const auto idx = perm.slice(0, i, std::min<std::int64_t>(i + config.batch_size, n));
      if (idx.size(0) < 2) continue;
      const auto losses = trainer.train_step(real.index_select(0, idx), real_labels.index_select(0, idx));
      ++step;
      run.losses.push_back({step, losses.critic_loss, losses.generator_loss});
      events << step << ',' << losses.critic_loss << ',' << losses.generator_loss << '\n';
    }

    if (epoch % config.fid_eval_interval != 0) continue;
    auto generated = generate_samples(trainer.generator(), counts, eval_seed);
    const double fid = compute_fid(real_features, features_of(features, generated)).value;
    if (!std::isfinite(fid)) throw NumericalError("FID is not finite at epoch " + std::to_string(epoch));
    const fs::path ckpt = checkpoint_dir(dir, epoch);
    trainer.save_checkpoint(ckpt, epoch, options.config_hash);
    run.checkpoints.emplace_back(epoch, ckpt);
    run.fid_history.emplace_back(epoch, fid);
    fid_csv << epoch << ',' << fid << '\n';
    fid_csv.flush();
    events.flush();
    if (!fid_csv || !events) throw IoError("write failed in " + dir.string());
    if (options.on_evaluation) options.on_evaluation(epoch, fid);

    if (fid < best) {
      best = fid;
      since_best = 0;
    } else if (++since_best >= config.early_stop_patience && config.early_stop_patience > 0) {
      info("early stop at epoch " + std::to_string(epoch) + ": no FID improvement in " +
           std::to_string(since_best) + " evaluations");
      break;
    }
  }
  run.critic_updates = trainer.critic_updates();
  run.generator_updates = trainer.generator_updates();
  return run;
}

}  // namespace cgaug
