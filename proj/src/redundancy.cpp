#include "cgaug/redundancy.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "cgaug/errors.hpp"
#include "cgaug/gan_training.hpp"
#include "cgaug/image.hpp"

namespace cgaug {

using nlohmann::json;

ProbeBatch make_probe_batch(int batch_size, int latent_dim, int n_classes, std::uint64_t seed) {
  if (batch_size < 1 || latent_dim < 1 || n_classes < 1) throw ValidationError("probe batch: sizes must be positive");
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  ProbeBatch probe;
  probe.latents = torch::randn({batch_size, latent_dim}, gen, torch::kFloat32);
  probe.labels = torch::arange(batch_size, torch::kInt64) % n_classes;
  return probe;
}

ActivationSample capture_activations(Generator& generator, const std::string& layer, const ProbeBatch& probe) {
  const auto names = generator->layer_names();
  if (std::find(names.begin(), names.end(), layer) == names.end()) {
    std::string available;
    for (const auto& n : names) available += (available.empty() ? "" : ", ") + n;
    throw ValidationError("unknown layer '" + layer + "'; available: " + available);
  }
  torch::Tensor captured;
  {
    torch::NoGradGuard guard;
    const bool was_training = generator->is_training();
    generator->eval();
    generator->forward(probe.latents, probe.labels, [&](const std::string& name, const torch::Tensor& t) {
      if (name == layer) captured = t.detach().clone();
    });
    generator->train(was_training);
  }
  if (captured.dim() != 4) throw ShapeError("layer '" + layer + "' is not a feature map");
  const auto bhwc = captured.permute({0, 2, 3, 1}).contiguous().to(torch::kFloat32);
  ActivationSample sample;
  sample.layer_name = layer;
  for (int i = 0; i < 4; ++i) sample.shape[static_cast<std::size_t>(i)] = bhwc.size(i);
  const float* p = bhwc.data_ptr<float>();
  sample.values.assign(p, p + bhwc.numel());
  return sample;
}

ActivationSample capture_activations(const std::filesystem::path& checkpoint_dir, const std::string& layer,
                                     const ProbeBatch& probe) {
  Generator g = load_generator(checkpoint_dir);
  return capture_activations(g, layer, probe);
}

namespace {

LayerReport layer_report(Generator& g, const std::string& layer, const ProbeBatch& probe) {
  LayerReport r;
  r.layer = layer;
  const auto sample = capture_activations(g, layer, probe);
  r.shape = sample.shape;
  r.matrix = channel_correlation(sample);
  r.redundancy = redundancy_score(r.matrix);
  return r;
}

json layer_json(const LayerReport& r) {
  return json{{"layer", r.layer},
              {"shape_bhwc", r.shape},
              {"redundancy", r.redundancy},
              {"n_observations", r.matrix.n_observations}};
}

}  // namespace

void to_json(json& j, const ModelComparison& c) {
  j = json{{"proposed", layer_json(c.proposed)},
           {"baseline", layer_json(c.baseline)},
           {"probe_seed", c.probe_seed},
           {"probe_size", c.probe_size},
           {"lower", c.lower},
           {"config_hash", c.config_hash}};
}

ModelComparison compare_models(Generator& proposed, Generator& baseline, const std::string& proposed_layer,
                               const std::string& baseline_layer, std::uint64_t probe_seed, int probe_size,
                               const std::filesystem::path& out_dir, const std::string& config_hash) {
  const auto& ps = proposed->spec();
  const auto& bs = baseline->spec();
  if (ps.latent_dim != bs.latent_dim || ps.n_classes != bs.n_classes) {
    throw ValidationError("compare_models: generators differ in latent size or class count");
  }
  const ProbeBatch probe = make_probe_batch(probe_size, ps.latent_dim, ps.n_classes, probe_seed);
  ModelComparison c;
  c.probe_seed = probe_seed;
  c.probe_size = probe_size;
  c.config_hash = config_hash;
  c.proposed = layer_report(proposed, proposed_layer, probe);
  c.baseline = layer_report(baseline, baseline_layer, probe);
  for (std::size_t i = 1; i < 4; ++i) {
    if (c.proposed.shape[i] != c.baseline.shape[i]) {
      throw ValidationError("compare_models: layers '" + proposed_layer + "' and '" + baseline_layer +
                            "' differ in H x W x C");
    }
  }
  c.lower = c.proposed.redundancy < c.baseline.redundancy   ? "proposed"
            : c.baseline.redundancy < c.proposed.redundancy ? "baseline"
                                                            : "tie";
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const int cell = std::max(2, 384 / static_cast<int>(c.proposed.matrix.values.rows()));
    for (const auto* r : {&c.proposed, &c.baseline}) {
      const std::string stem = r == &c.proposed ? "proposed" : "baseline";
      write_png(render_heatmap(r->matrix.values, -1.0, 1.0, cell), out_dir / (stem + "_correlation.png"),
                c.config_hash);
      write_matrix_csv(r->matrix.values, out_dir / (stem + "_correlation.csv"));
    }
    std::ofstream f(out_dir / "redundancy.json");
    if (!f) throw IoError("cannot write " + (out_dir / "redundancy.json").string());
    f << json(c).dump(2) << '\n';
  }
  return c;
}

}  // namespace cgaug
