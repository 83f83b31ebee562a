#include "cgaug/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cgaug/augmenters.hpp"
#include "cgaug/errors.hpp"
#include "cgaug/experiment_config.hpp"
#include "cgaug/fid.hpp"
#include "cgaug/image.hpp"
#include "cgaug/log.hpp"
#include "cgaug/redundancy.hpp"

namespace cgaug {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
};

ExperimentConfig resolve_config(const CommonOptions& o) {
  ExperimentConfig cfg;
  if (!o.config.empty()) cfg = load_experiment_config(o.config);
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.derive_seeds();
  }
  if (const char* root = std::getenv(kOutputRootEnv); root && *root) cfg.output_root = root;
  return cfg;
}

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "Experiment config (JSON)");
  cmd->add_option("--seed", o.seed, "Global seed (overrides the config)");
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

SpectrogramCorpus load_corpus_for(const ExperimentConfig& cfg, const std::string& flag) {
  const fs::path path = flag.empty() ? cfg.corpus_path() : fs::path(flag);
  if (!fs::exists(path)) {
    throw IoError("corpus not found: " + path.string() + " (run `cgaug preprocess` first)");
  }
  return load_corpus(path);
}

// Adapts model specs to the corpus: classes come from the data.
void fit_specs_to_corpus(ExperimentConfig& cfg, const SpectrogramCorpus& corpus) {
  const int k = static_cast<int>(corpus.classes.size());
  cfg.gan.generator.n_classes = k;
  cfg.gan.critic.n_classes = k;
  if (corpus.config.n_mels != cfg.gan.generator.output_size ||
      corpus.config.frames_per_window != cfg.gan.generator.output_size) {
    throw ValidationError("spectrograms are " + std::to_string(corpus.config.n_mels) + "x" +
                          std::to_string(corpus.config.frames_per_window) + " but the generator emits " +
                          std::to_string(cfg.gan.generator.output_size) + "x" +
                          std::to_string(cfg.gan.generator.output_size));
  }
}

FeatureExtractor feature_extractor_for(const ExperimentConfig& cfg, const SpectrogramCorpus& corpus) {
  const fs::path dir = cfg.feature_extractor_dir();
  if (fs::exists(dir / "architecture.json")) return FeatureExtractor::load(dir);
  info("training the FID feature extractor (" + dir.string() + ")");
  std::vector<double> history;
  auto fx = train_feature_extractor(corpus, cfg.evaluation.feature_resnet, cfg.evaluation.feature_extractor, &history);
  fx.save(dir);
  if (!history.empty()) {
    std::ostringstream s;
    s << "feature extractor training accuracy " << std::fixed << std::setprecision(3) << history.back();
    info(s.str());
  }
  return fx;
}

// A checkpoint directory, or a run directory whose best checkpoint is used.
fs::path resolve_checkpoint(const fs::path& p) {
  if (fs::exists(p / "architecture.json")) return p;
  if (fs::exists(p / "fid.csv")) return load_training_run(p).best_checkpoint();
  throw IoError("no checkpoint or training run at " + p.string());
}

std::unique_ptr<Augmenter> make_augmenter(const std::string& strategy, const ExperimentConfig& cfg,
                                          const SpectrogramCorpus& corpus) {
  if (strategy == "none") return std::make_unique<NoAugmenter>();
  if (strategy == "spec_augment") {
    return std::make_unique<SpecAugmentAugmenter>(cfg.policy(AugmentationKind::kSpecAugment));
  }
  if (strategy == "white_noise" || strategy == "pitch_shift" || strategy == "time_stretch") {
    if (!corpus.stats) throw ValidationError("waveform augmentation needs a normalized corpus");
    return std::make_unique<WaveformAugmenter>(cfg.policy(augmentation_kind_from_string(strategy)), corpus.config,
                                               *corpus.stats, wav_clip_source());
  }
  const fs::path p(strategy);
  if (fs::exists(p)) return GanAugmenter::from_checkpoint(resolve_checkpoint(p), cfg.generation_seed());
  throw ValidationError("unknown augmentation strategy '" + strategy +
                        "' (none, white_noise, pitch_shift, time_stretch, spec_augment, or a checkpoint path)");
}

double fid_of_checkpoint(const fs::path& checkpoint, const SpectrogramCorpus& corpus, const FeatureExtractor& fx,
                         std::uint64_t seed) {
  const auto counts = corpus.per_class_counts();
  const auto generated = generate_samples(checkpoint, counts, seed);
  return compute_fid(fx.extract(stack_spectrograms(corpus.items)), fx.extract(stack_spectrograms(generated))).value;
}

std::string format_pct(double v, int precision = 2) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

// ---------------------------------------------------------------------------

int cmd_preprocess(const CommonOptions& common, const std::string& manifest_flag, const std::string& out_flag) {
  ExperimentConfig cfg = resolve_config(common);
  const fs::path manifest_path = manifest_flag.empty() ? cfg.dataset.manifest : fs::path(manifest_flag);
  if (manifest_path.empty()) throw ValidationError("no manifest given (--manifest or dataset.manifest)");
  if (!manifest_flag.empty()) cfg.dataset.manifest = manifest_flag;
  const auto manifest = load_manifest(manifest_path);
  auto result = build_corpus(manifest, cfg.dataset.spectrogram);
  for (const auto& clip : result.short_clips) warn("clip shorter than one window: " + clip);
  if (result.corpus.items.empty()) warn("corpus is empty: no clip yields a full window");
  result.corpus.config_hash = config_hash(cfg);
  const fs::path out = out_flag.empty() ? cfg.corpus_path() : fs::path(out_flag);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_corpus(result.corpus, out);

  const auto counts = result.corpus.per_class_counts();
  std::cout << std::left << std::setw(24) << "class" << "spectrograms\n";
  for (std::size_t c = 0; c < counts.size(); ++c) {
    std::cout << std::left << std::setw(24) << result.corpus.classes[c] << counts[c] << '\n';
  }
  std::cout << std::left << std::setw(24) << "total" << result.corpus.items.size() << '\n'
            << "wrote " << out.string() << '\n';
  return kExitOk;
}

int cmd_augment(const CommonOptions& common, const std::string& corpus_flag, const std::string& strategy,
                const std::string& out) {
  const ExperimentConfig cfg = resolve_config(common);
  SpectrogramCorpus corpus = load_corpus_for(cfg, corpus_flag);
  auto augmenter = make_augmenter(strategy, cfg, corpus);
  if (!augmenter->augments()) throw ValidationError("strategy 'none' produces no samples");
  auto extra = augmenter->augment(corpus.items, static_cast<int>(corpus.classes.size()), 0);
  for (auto& s : extra) corpus.items.push_back(std::move(s));
  corpus.config_hash = config_hash(cfg);
  if (const fs::path dst(out); dst.has_parent_path()) fs::create_directories(dst.parent_path());
  save_corpus(corpus, out);
  std::cout << "wrote " << corpus.items.size() << " spectrograms to " << out << '\n';
  return kExitOk;
}

int cmd_train_gan(const CommonOptions& common, const std::string& corpus_flag, const std::string& out_flag,
                  const std::string& resume, bool baseline) {
  ExperimentConfig cfg = resolve_config(common);
  const auto corpus = load_corpus_for(cfg, corpus_flag);
  fit_specs_to_corpus(cfg, corpus);
  const auto gspec = baseline ? cfg.gan.generator.baseline() : cfg.gan.generator;
  const auto fx = feature_extractor_for(cfg, corpus);

  RunOptions options;
  options.config_hash = config_hash(cfg);
  if (!resume.empty()) {
    options.run_dir = resume;
    options.resume = true;
  } else {
    options.run_dir = !out_flag.empty() ? fs::path(out_flag) : baseline ? cfg.baseline_run_dir() : cfg.gan_run_dir();
  }
  options.on_evaluation = [](int epoch, double fid) {
    std::cout << "epoch " << epoch << " fid " << std::setprecision(6) << fid << std::endl;
  };
  const auto run = run_training(corpus, gspec, cfg.gan.critic, cfg.gan.training,
                                [&](const torch::Tensor& x) { return fx.extract(x); }, options);
  std::cout << "best epoch " << run.best_epoch() << " checkpoint " << run.best_checkpoint().string() << '\n';
  return kExitOk;
}

int cmd_select_model(const std::string& run_dir) {
  const auto run = load_training_run(run_dir);
  const int best = run.best_epoch();
  double fid = 0.0;
  for (const auto& [e, f] : run.fid_history) {
    if (e == best) fid = f;
  }
  const json j{{"best_epoch", best}, {"fid", fid}, {"checkpoint", run.best_checkpoint().string()}};
  write_json(fs::path(run_dir) / "selected.json", j);
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_evaluate(const CommonOptions& common, const std::string& corpus_flag, const std::string& strategy,
                 const std::string& out, const std::string& baseline_report) {
  const ExperimentConfig cfg = resolve_config(common);
  const auto corpus = load_corpus_for(cfg, corpus_flag);
  auto augmenter = make_augmenter(strategy, cfg, corpus);
  auto report = run_cv_experiment(corpus, *augmenter, cfg.evaluation.cv, [](int fold, double f1) {
    std::cout << "fold " << fold << " macro F1 " << std::setprecision(4) << f1 << std::endl;
  });
  report.config_hash = config_hash(cfg);
  if (!baseline_report.empty()) {
    std::ifstream f(baseline_report);
    if (!f) throw IoError("cannot read " + baseline_report);
    json b;
    f >> b;
    report.relative_improvement = relative_improvement(report, b.get<CvReport>());
  } else if (!augmenter->augments()) {
    report.relative_improvement = 0.0;
  }
  json j = report;
  j["experiment_config"] = cfg;
  write_json(out, j);
  std::cout << report.augmentation_name << ": " << format_pct(100.0 * report.mean) << " +- "
            << format_pct(100.0 * report.std) << " %\n";
  return kExitOk;
}

int cmd_run_table1(const CommonOptions& common, const std::string& corpus_flag, std::string strategies_flag,
                   const std::string& proposed_flag, const std::string& baseline_flag, const std::string& out_flag) {
  ExperimentConfig cfg = resolve_config(common);
  const auto corpus = load_corpus_for(cfg, corpus_flag);
  fit_specs_to_corpus(cfg, corpus);
  std::vector<std::string> strategies;
  if (strategies_flag.empty()) {
    strategies = {"none", "white_noise", "pitch_shift", "time_stretch", "spec_augment", "cwgan_baseline", "proposed"};
  } else {
    std::stringstream s(strategies_flag);
    for (std::string item; std::getline(s, item, ',');) {
      if (!item.empty()) strategies.push_back(item);
    }
  }
  const fs::path proposed_run = proposed_flag.empty() ? cfg.gan_run_dir() : fs::path(proposed_flag);
  const fs::path baseline_run = baseline_flag.empty() ? cfg.baseline_run_dir() : fs::path(baseline_flag);
  auto gan_checkpoint = [&](const std::string& name) {
    const bool is_baseline = name == "cwgan_baseline";
    const fs::path run = is_baseline ? baseline_run : proposed_run;
    if (!fs::exists(run)) {
      throw ValidationError("strategy '" + name + "' needs a trained GAN at " + run.string() +
                            "; run `cgaug train-gan --config <file>" + (is_baseline ? " --baseline" : "") +
                            "` first");
    }
    return resolve_checkpoint(run);
  };
  // Fail before any compute if a GAN strategy lacks its checkpoint.
  for (const auto& s : strategies) {
    if (s == "cwgan_baseline" || s == "proposed") gan_checkpoint(s);
  }

  const std::string hash = config_hash(cfg);
  const fs::path out_dir = out_flag.empty() ? cfg.output_root / "table1" : fs::path(out_flag);
  fs::create_directories(out_dir);
  std::cout << "cv seed " << cfg.evaluation.cv.seed << ", " << cfg.evaluation.cv.n_folds
            << " paired folds for every strategy\n";

  std::optional<FeatureExtractor> fx;
  std::vector<CvReport> reports;
  for (const auto& s : strategies) {
    std::unique_ptr<Augmenter> augmenter;
    std::optional<double> fid;
    if (s == "cwgan_baseline" || s == "proposed") {
      const auto ckpt = gan_checkpoint(s);
      augmenter = GanAugmenter::from_checkpoint(ckpt, cfg.generation_seed(), s);
      if (!fx) fx.emplace(feature_extractor_for(cfg, corpus));
      fid = fid_of_checkpoint(ckpt, corpus, *fx, cfg.generation_seed());
    } else {
      augmenter = make_augmenter(s, cfg, corpus);
    }
    std::cout << "== " << s << std::endl;
    auto r = run_cv_experiment(corpus, *augmenter, cfg.evaluation.cv, [](int fold, double f1) {
      std::cout << "  fold " << fold << " macro F1 " << std::setprecision(4) << f1 << std::endl;
    });
    r.augmentation_name = s;
    r.fid = fid;
    r.config_hash = hash;
    reports.push_back(std::move(r));
  }
  const CvReport* none = nullptr;
  for (const auto& r : reports) {
    if (r.augmentation_name == "none") none = &r;
  }
  for (auto& r : reports) {
    if (none && &r != none) r.relative_improvement = relative_improvement(r, *none);
  }

  std::ofstream md(out_dir / "table1.md");
  std::ofstream csv(out_dir / "table1.csv");
  if (!md || !csv) throw IoError("cannot write table in " + out_dir.string());
  md << "<!-- config " << hash << " -->\n"
     << "| Method | FID | Macro F1 (mean ± std) | Relative improvement |\n|---|---|---|---|\n";
  csv << "# config " << hash << "\nmethod,fid,macro_f1_mean,macro_f1_std,relative_improvement\n";
  for (const auto& r : reports) {
    const std::string fid = r.fid ? format_pct(*r.fid) : "";
    const std::string rel = r.relative_improvement ? format_pct(*r.relative_improvement) + " %" : "";
    md << "| " << r.augmentation_name << " | " << fid << " | " << format_pct(100.0 * r.mean) << " ± "
       << format_pct(100.0 * r.std) << " % | " << rel << " |\n";
    csv << r.augmentation_name << ',' << fid << ',' << 100.0 * r.mean << ',' << 100.0 * r.std << ','
        << (r.relative_improvement ? format_pct(*r.relative_improvement, 6) : "") << '\n';
  }
  write_json(out_dir / "table1.json", json{{"config_hash", hash}, {"reports", reports}, {"experiment_config", cfg}});
  std::cout << "wrote " << (out_dir / "table1.md").string() << '\n';
  return kExitOk;
}

int cmd_analyze_redundancy(const CommonOptions& common, const std::string& proposed_flag,
                           const std::string& baseline_flag, std::string proposed_layer, std::string baseline_layer,
                           std::optional<int> probe_size, const std::string& out_flag) {
  const ExperimentConfig cfg = resolve_config(common);
  const fs::path p = proposed_flag.empty() ? cfg.gan_run_dir() : fs::path(proposed_flag);
  const fs::path b = baseline_flag.empty() ? cfg.baseline_run_dir() : fs::path(baseline_flag);
  Generator proposed = load_generator(resolve_checkpoint(p));
  Generator baseline = load_generator(resolve_checkpoint(b));
  const fs::path out = out_flag.empty() ? cfg.output_root / "redundancy" : fs::path(out_flag);
  const auto c = compare_models(proposed, baseline, proposed_layer, baseline_layer, cfg.probe_seed(),
                                probe_size.value_or(cfg.evaluation.probe_size), out, config_hash(cfg));
  std::cout << "proposed " << c.proposed.layer << " redundancy " << c.proposed.redundancy << '\n'
            << "baseline " << c.baseline.layer << " redundancy " << c.baseline.redundancy << '\n'
            << "lower: " << c.lower << '\n';
  return kExitOk;
}

RgbImage panel(const MelSpectrogram& s, int cell) {
  // Low mel bins at the bottom.
  std::vector<float> flipped(s.values.size());
  for (int m = 0; m < s.n_mels; ++m) {
    for (int t = 0; t < s.n_frames; ++t) {
      flipped[static_cast<std::size_t>(s.n_mels - 1 - m) * s.n_frames + t] = s.at(m, t);
    }
  }
  return render_grayscale(flipped, s.n_mels, s.n_frames, cell);
}

int cmd_plot(const CommonOptions& common, const std::string& run_flag, const std::string& corpus_flag,
             const std::string& baseline_flag, const std::string& out_flag) {
  const ExperimentConfig cfg = resolve_config(common);
  const fs::path run_dir = run_flag.empty() ? cfg.gan_run_dir() : fs::path(run_flag);
  std::vector<std::string> missing;
  for (const char* f : {"fid.csv", "events.csv", "checkpoints"}) {
    if (!fs::exists(run_dir / f)) missing.push_back((run_dir / f).string());
  }
  const fs::path corpus_path = corpus_flag.empty() ? cfg.corpus_path() : fs::path(corpus_flag);
  if (!fs::exists(corpus_path)) missing.push_back(corpus_path.string());
  if (!baseline_flag.empty() && !fs::exists(fs::path(baseline_flag) / "fid.csv")) {
    missing.push_back((fs::path(baseline_flag) / "fid.csv").string());
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += "\n  " + m;
    throw IoError("missing artifacts:" + list);
  }
  const fs::path out = out_flag.empty() ? run_dir / "plots" : fs::path(out_flag);
  fs::create_directories(out);
  const std::string hash = config_hash(cfg);

  const auto run = load_training_run(run_dir);
  std::vector<std::pair<double, double>> fid_points, loss_points;
  for (const auto& [e, f] : run.fid_history) fid_points.emplace_back(e, f);
  for (const auto& r : run.losses) loss_points.emplace_back(static_cast<double>(r.step), r.critic_loss);
  write_png(render_line_plot(fid_points, 640, 360), out / "fid_curve.png", hash);
  write_png(render_line_plot(loss_points, 640, 360), out / "critic_loss.png", hash);

  // Rows: real, proposed, then baseline when given; one column per class.
  const auto corpus = load_corpus(corpus_path);
  const int k = static_cast<int>(corpus.classes.size());
  std::vector<std::vector<MelSpectrogram>> rows(1, std::vector<MelSpectrogram>(static_cast<std::size_t>(k)));
  std::vector<bool> found(static_cast<std::size_t>(k), false);
  for (const auto& s : corpus.items) {
    if (!found[static_cast<std::size_t>(s.label)]) {
      rows[0][static_cast<std::size_t>(s.label)] = s;
      found[static_cast<std::size_t>(s.label)] = true;
    }
  }
  const std::vector<int> one_each(static_cast<std::size_t>(k), 1);
  rows.push_back(generate_samples(run.best_checkpoint(), one_each, cfg.generation_seed()));
  if (!baseline_flag.empty()) {
    rows.push_back(generate_samples(resolve_checkpoint(baseline_flag), one_each, cfg.generation_seed()));
  }
  const int cell = 2, gap = 4;
  const int pw = corpus.config.frames_per_window * cell, ph = corpus.config.n_mels * cell;
  RgbImage grid(k * (pw + gap) + gap, static_cast<int>(rows.size()) * (ph + gap) + gap);
  int panels = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (int c = 0; c < k; ++c) {
      if (rows[r][static_cast<std::size_t>(c)].values.empty()) continue;
      grid.blit(panel(rows[r][static_cast<std::size_t>(c)], cell), gap + c * (pw + gap),
                gap + static_cast<int>(r) * (ph + gap));
      ++panels;
    }
  }
  write_png(grid, out / "sample_grid.png", hash);
  write_json(out / "plots.json", json{{"config_hash", hash},
                                      {"rows", rows.size()},
                                      {"columns", k},
                                      {"panels", panels},
                                      {"files", {"fid_curve.png", "critic_loss.png", "sample_grid.png"}}});
  std::cout << "wrote " << panels << " panels and curves to " << out.string() << '\n';
  return kExitOk;
}

int dispatch(int argc, const char* const* argv) {
  CLI::App app{"Conditional spectrogram GAN augmentation toolkit", "cgaug"};
  app.require_subcommand(1);
  CommonOptions common;

  std::string manifest, out, corpus, strategy, resume, run, baseline_report, strategies, proposed, baseline;
  std::string proposed_layer = kProposedProbeLayer, baseline_layer = kBaselineProbeLayer;
  std::optional<int> probe_size;
  bool baseline_flag = false;

  auto* pre = app.add_subcommand("preprocess", "Audio manifest to a normalized spectrogram corpus");
  add_common(pre, common);
  pre->add_option("--manifest", manifest, "Manifest JSON or dataset directory");
  pre->add_option("--out", out, "Corpus file");

  auto* aug = app.add_subcommand("augment", "Write a corpus doubled by one augmentation strategy");
  add_common(aug, common);
  aug->add_option("--corpus", corpus, "Input corpus");
  aug->add_option("--strategy", strategy, "Strategy name or GAN checkpoint")->required();
  aug->add_option("--out", out, "Output corpus")->required();

  auto* train = app.add_subcommand("train-gan", "Train the conditional WGAN-GP");
  add_common(train, common);
  train->add_option("--corpus", corpus, "Input corpus");
  train->add_option("--out", out, "Run directory");
  train->add_option("--resume", resume, "Resume a run directory");
  train->add_flag("--baseline", baseline_flag, "Train the generator without the SE stage");

  auto* select = app.add_subcommand("select-model", "Report the lowest-FID checkpoint of a run");
  select->add_option("--run", run, "Run directory")->required();

  auto* eval = app.add_subcommand("evaluate", "Cross-validated classifier with one augmentation");
  add_common(eval, common);
  eval->add_option("--corpus", corpus, "Input corpus");
  eval->add_option("--augment", strategy, "Strategy name or GAN checkpoint/run")->required();
  eval->add_option("--out", out, "report.json path")->required();
  eval->add_option("--baseline-report", baseline_report, "Report of the no-augmentation run");

  auto* table = app.add_subcommand("run-table1", "Evaluate every augmentation strategy on paired folds");
  add_common(table, common);
  table->add_option("--corpus", corpus, "Input corpus");
  table->add_option("--strategies", strategies, "Comma-separated subset");
  table->add_option("--proposed", proposed, "Proposed GAN run or checkpoint");
  table->add_option("--baseline", baseline, "Baseline GAN run or checkpoint");
  table->add_option("--out", out, "Output directory");

  auto* red = app.add_subcommand("analyze-redundancy", "Channel correlation of generator activations");
  add_common(red, common);
  red->add_option("--proposed", proposed, "Proposed GAN run or checkpoint");
  red->add_option("--baseline", baseline, "Baseline GAN run or checkpoint");
  red->add_option("--proposed-layer", proposed_layer, "Layer of the proposed generator");
  red->add_option("--baseline-layer", baseline_layer, "Layer of the baseline generator");
  red->add_option("--probe-size", probe_size, "Probe batch size");
  red->add_option("--out", out, "Output directory");

  auto* plot = app.add_subcommand("plot", "Render FID curve, losses and a sample grid");
  add_common(plot, common);
  plot->add_option("--run", run, "Run directory");
  plot->add_option("--corpus", corpus, "Real corpus for the first grid row");
  plot->add_option("--baseline", baseline, "Baseline run or checkpoint for the last grid row");
  plot->add_option("--out", out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  if (*pre) return cmd_preprocess(common, manifest, out);
  if (*aug) return cmd_augment(common, corpus, strategy, out);
  if (*train) return cmd_train_gan(common, corpus, out, resume, baseline_flag);
  if (*select) return cmd_select_model(run);
  if (*eval) return cmd_evaluate(common, corpus, strategy, out, baseline_report);
  if (*table) return cmd_run_table1(common, corpus, strategies, proposed, baseline, out);
  if (*red) return cmd_analyze_redundancy(common, proposed, baseline, proposed_layer, baseline_layer, probe_size, out);
  if (*plot) return cmd_plot(common, run, corpus, baseline, out);
  return kExitValidation;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  try {
    return dispatch(argc, argv);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  }
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"cgaug"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace cgaug
