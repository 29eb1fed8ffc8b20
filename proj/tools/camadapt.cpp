#include <CLI11.hpp>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "camadapt/adapt.hpp"
#include "camadapt/dataio.hpp"
#include "camadapt/error.hpp"
#include "camadapt/eval.hpp"
#include "camadapt/gfk.hpp"
#include "camadapt/jsonio.hpp"
#include "camadapt/metric.hpp"
#include "camadapt/parallel.hpp"
#include "camadapt/rng.hpp"
#include "camadapt/synth.hpp"

namespace fs = std::filesystem;
using namespace camadapt;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string sanitize(const std::string& name) {
  std::string out;
  for (char c : name) {
    const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                      (c >= '0' && c <= '9') || c == '-' || c == '_';
    out += keep ? c : '_';
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

std::vector<std::string> split_csv_list(const std::string& value) {
  std::vector<std::string> items;
  std::string current;
  for (char c : value) {
    if (c == ',') {
      if (!current.empty()) items.push_back(current);
      current.clear();
    } else {
      current += c;
    }
  }
  if (!current.empty()) items.push_back(current);
  return items;
}

fs::path metric_path(const fs::path& out, const CameraPair& pair) {
  return out / "metrics" /
         ("metric_" + sanitize(pair.first) + "__" + sanitize(pair.second) + ".json");
}

// ---- synth ---------------------------------------------------------------

struct SynthFlags {
  int cameras = 0;
  int identities = 0;
  int images = 5;
  int latent = 20;
  int dim = 100;
  double noise = 0.05;
  std::string angles;
  std::uint64_t seed = 0;
  std::string out = "out";
};

int cmd_synth(const SynthFlags& f) {
  SynthConfig config;
  config.n_cameras = f.cameras;
  config.n_identities = f.identities;
  config.images_per_identity = f.images;
  config.latent_dim = f.latent;
  config.feature_dim = f.dim;
  config.noise_sigma = f.noise;
  config.seed = f.seed;
  if (f.angles.empty()) {
    // Evenly spaced camera shifts across the full quarter turn.
    for (int c = 0; c < f.cameras; ++c) {
      config.shift_angles.push_back(
          f.cameras > 1 ? kPi / 2.0 * c / (f.cameras - 1) : 0.0);
    }
  } else {
    for (const std::string& item : split_csv_list(f.angles)) {
      config.shift_angles.push_back(std::stod(item));
    }
  }

  SynthResult result = generate_network(config);
  const fs::path out(f.out);
  write_dataset(result.dataset, out);
  save_ground_truth(result.truth, out / "ground_truth.json");

  Json run;
  run["command"] = "synth";
  run["cameras"] = f.cameras;
  run["identities"] = f.identities;
  run["images"] = f.images;
  run["latent"] = f.latent;
  run["dim"] = f.dim;
  run["noise"] = f.noise;
  run["angles"] = config.shift_angles;
  run["seed"] = f.seed;
  run["out"] = f.out;
  write_json_file(out / "run.json", run);
  std::cout << "wrote " << result.dataset.cameras.size() << " cameras to " << f.out << "\n";
  return 0;
}

// ---- train ---------------------------------------------------------------

struct TrainFlags {
  std::string manifest;
  std::string cameras;
  std::string metric = "kissme";
  std::uint64_t seed = 0;
  std::string out = "out";
};

int cmd_train(const TrainFlags& f) {
  NetworkDataset ds = load_dataset(f.manifest);
  std::vector<std::string> cameras = ds.cameras;
  if (!f.cameras.empty()) {
    cameras = split_csv_list(f.cameras);
    std::set<std::string> known(ds.cameras.begin(), ds.cameras.end());
    for (const std::string& cam : cameras) {
      if (known.count(cam) == 0) {
        std::string valid;
        for (const std::string& k : ds.cameras) valid += (valid.empty() ? "" : ", ") + k;
        fail(Errc::invalid_config, "unknown camera id " + cam + " (valid: " + valid + ")");
      }
    }
  }
  std::sort(cameras.begin(), cameras.end());

  auto identities = sorted_identities(ds);
  const std::set<std::string> all_ids(identities.begin(), identities.end());
  const MetricMethod method =
      f.metric == "ldml" ? MetricMethod::ldml : MetricMethod::kissme;

  const fs::path out(f.out);
  int written = 0;
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    LabeledSet set_a = camera_samples(ds, cameras[i]);
    for (std::size_t j = i + 1; j < cameras.size(); ++j) {
      LabeledSet set_b = camera_samples(ds, cameras[j]);
      PairOptions po;
      po.seed = derive_seed(f.seed, hash_str("pair-cap") ^ hash_str(cameras[i]) ^
                                        hash_str(cameras[j]));
      PairSet pairs = build_pairs(set_a, set_b, all_ids, po);
      Metric m = method == MetricMethod::kissme ? kissme_fit(pairs) : ldml_fit(pairs);
      m.source_camera = cameras[i];
      m.dest_camera = cameras[j];
      save_metric(m, metric_path(out, make_camera_pair(cameras[i], cameras[j])));
      ++written;
    }
  }

  Json run;
  run["command"] = "train";
  run["manifest"] = f.manifest;
  run["cameras"] = cameras;
  run["metric"] = f.metric;
  run["seed"] = f.seed;
  run["out"] = f.out;
  write_json_file(out / "run.json", run);
  std::cout << "wrote " << written << " metric files to " << (out / "metrics").string()
            << "\n";
  return 0;
}

// ---- add-camera ----------------------------------------------------------

struct AddCameraFlags {
  std::string manifest;
  std::vector<std::string> targets;
  std::string multi = "common";
  int subspace_dim = 50;
  std::uint64_t seed = 0;
  std::string out = "out";
};

int cmd_add_camera(const AddCameraFlags& f) {
  if (f.multi != "common" && f.multi != "per-target") {
    fail(Errc::invalid_config, "--multi must be 'common' or 'per-target'");
  }
  NetworkDataset ds = load_dataset(f.manifest);
  std::set<std::string> known(ds.cameras.begin(), ds.cameras.end());
  std::set<std::string> target_set(f.targets.begin(), f.targets.end());
  for (const std::string& t : f.targets) {
    if (known.count(t) == 0) fail(Errc::invalid_config, "unknown target camera: " + t);
  }

  std::vector<SourceCamera> sources;
  for (const std::string& cam : ds.cameras) {
    if (target_set.count(cam) == 0) sources.push_back({cam, camera_samples(ds, cam)});
  }
  std::sort(sources.begin(), sources.end(),
            [](const SourceCamera& a, const SourceCamera& b) {
              return a.camera_id < b.camera_id;
            });

  std::vector<TargetCamera> targets;
  for (const std::string& t : f.targets) {
    targets.push_back({t, strip_labels(camera_samples(ds, t))});
  }

  MultiTargetResult result = common_best_source(sources, targets, f.subspace_dim);

  // Metrics between every source and the connector(s) come from a prior
  // `train` run in the same output directory.
  const fs::path out(f.out);
  std::map<CameraPair, Metric> metrics;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    for (std::size_t j = i + 1; j < sources.size(); ++j) {
      const CameraPair pair = make_camera_pair(sources[i].camera_id, sources[j].camera_id);
      const fs::path path = metric_path(out, pair);
      if (!fs::exists(path)) {
        fail(Errc::missing_metric,
             "no trained metric for pair " + pair.first + ", " + pair.second +
                 " (expected " + path.string() + "; run `train` first)");
      }
      metrics.emplace(pair, load_metric(path));
    }
  }

  const fs::path kernel_dir = out / "kernels";
  for (std::size_t ti = 0; ti < targets.size(); ++ti) {
    const DiscoveryResult& dr = result.per_target[ti];
    const std::string& target = targets[ti].camera_id;
    save_ranking(dr.ranking, kernel_dir / ("ranking_" + sanitize(target) + ".json"));

    SourceRanking effective = dr.ranking;
    if (f.multi == "common") effective.best_source = result.common_best;
    auto scorers = assemble_network_kernels(effective, dr.kernels, metrics);
    for (const auto& [pair, scorer] : scorers) {
      if (scorer.is_metric) continue;  // installed pairs keep their metric files
      const std::string stem = scorer.kernel.kind == KernelKind::transitive
                                   ? "transitive_"
                                   : "gfk_";
      save_kernel(scorer.kernel,
                  kernel_dir / (stem + sanitize(scorer.kernel.source_camera) + "__" +
                                sanitize(scorer.kernel.target_camera) + ".json"));
    }
  }

  if (f.multi == "common") {
    Json common;
    common["best"] = result.common_best;
    common["targets"] = f.targets;
    write_json_file(kernel_dir / "common_best.json", common);
    std::cout << "common best source: " << result.common_best << "\n";
  } else {
    for (const DiscoveryResult& dr : result.per_target) {
      std::cout << "best source for " << dr.ranking.target_camera << ": "
                << dr.ranking.best_source << "\n";
    }
  }

  Json run;
  run["command"] = "add-camera";
  run["manifest"] = f.manifest;
  run["targets"] = f.targets;
  run["multi"] = f.multi;
  run["subspace_dim"] = f.subspace_dim;
  run["seed"] = f.seed;
  run["out"] = f.out;
  write_json_file(out / "run.json", run);
  return 0;
}

// ---- evaluate / report ----------------------------------------------------

struct EvaluateFlags {
  std::string manifest;
  std::vector<std::string> targets;
  std::string modes = "ours_unsup";
  std::string metric = "kissme";
  int subspace_dim = 50;
  int dim = 100;
  int trials = 10;
  double train_fraction = 0.5;
  int images_per_identity = 5;
  double semi_fraction = 0.5;
  std::uint64_t seed = 0;
  std::string out = "out";
};

bool parse_mode(const std::string& token, EvalMode& mode) {
  if (token == "ours" || token == "ours_unsup") mode = EvalMode::ours_unsup;
  else if (token == "direct" || token == "direct_gfk") mode = EvalMode::direct_gfk;
  else if (token == "best" || token == "best_gfk") mode = EvalMode::best_gfk;
  else if (token == "semi" || token == "ours_semi") mode = EvalMode::ours_semi;
  else if (token == "euclidean" || token == "euclidean_baseline") mode = EvalMode::euclidean_baseline;
  else return false;
  return true;
}

void write_report_artifacts(const std::vector<ExperimentReport>& reports,
                            const fs::path& report_dir) {
  for (const ExperimentReport& report : reports) {
    const std::string tag = sanitize(report.mode_name);
    save_report(report, report_dir / ("report_" + tag + ".json"));
    for (const DirectionResult& dir : report.directions) {
      write_text_file(report_dir / ("curve_" + tag + "_" + sanitize(dir.probe_camera) +
                                    "__" + sanitize(dir.gallery_camera) + ".csv"),
                      curve_csv(dir.mean_curve));
    }
  }
  write_text_file(report_dir / "comparison.csv", comparison_csv(compare_modes(reports)));
}

int cmd_evaluate(const EvaluateFlags& f) {
  std::vector<EvalMode> modes;
  for (const std::string& token : split_csv_list(f.modes)) {
    EvalMode mode;
    if (!parse_mode(token, mode)) {
      std::cerr << "unknown mode '" << token
                << "' (expect ours|direct|best|semi|euclidean)\n";
      return 2;
    }
    modes.push_back(mode);
  }
  if (modes.empty()) {
    std::cerr << "no evaluation mode given\n";
    return 2;
  }

  NetworkDataset ds = load_dataset(f.manifest);
  std::vector<ExperimentReport> reports;
  for (EvalMode mode : modes) {
    EvalConfig config;
    config.mode = mode;
    config.metric_method = f.metric == "ldml" ? MetricMethod::ldml : MetricMethod::kissme;
    config.subspace_dim = f.subspace_dim;
    config.reduce_dim = f.dim;
    config.semi_fraction = f.semi_fraction;
    config.target_cameras = f.targets;
    config.split.seed = f.seed;
    config.split.trials = f.trials;
    config.split.train_fraction = f.train_fraction;
    config.split.images_per_identity = f.images_per_identity;
    reports.push_back(run_experiment(ds, config));
  }

  const fs::path out(f.out);
  write_report_artifacts(reports, out / "reports");

  Json run;
  run["command"] = "evaluate";
  run["manifest"] = f.manifest;
  run["targets"] = f.targets;
  run["modes"] = f.modes;
  run["metric"] = f.metric;
  run["subspace_dim"] = f.subspace_dim;
  run["dim"] = f.dim;
  run["trials"] = f.trials;
  run["train_fraction"] = f.train_fraction;
  run["images_per_identity"] = f.images_per_identity;
  run["semi_fraction"] = f.semi_fraction;
  run["seed"] = f.seed;
  run["out"] = f.out;
  write_json_file(out / "run.json", run);
  std::cout << "wrote " << reports.size() << " report(s) to " << (out / "reports").string()
            << "\n";
  return 0;
}

struct ReportFlags {
  std::vector<std::string> inputs;
  std::string out = "out";
};

int cmd_report(const ReportFlags& f) {
  std::vector<ExperimentReport> reports;
  for (const std::string& path : f.inputs) {
    reports.push_back(load_report(path));
  }
  write_report_artifacts(reports, fs::path(f.out) / "reports");

  Json run;
  run["command"] = "report";
  run["inputs"] = f.inputs;
  run["out"] = f.out;
  write_json_file(fs::path(f.out) / "run.json", run);
  std::cout << "wrote comparison for " << reports.size() << " report(s)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  configure_threads();

  CLI::App app{"unsupervised camera onboarding for person re-identification networks"};
  app.require_subcommand(1);

  SynthFlags synth_flags;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic camera network");
  synth->add_option("--cameras", synth_flags.cameras, "number of cameras")->required();
  synth->add_option("--identities", synth_flags.identities, "number of identities")->required();
  synth->add_option("--images", synth_flags.images, "images per identity per camera");
  synth->add_option("--latent", synth_flags.latent, "latent appearance dimension");
  synth->add_option("--dim", synth_flags.dim, "feature dimension");
  synth->add_option("--noise", synth_flags.noise, "feature noise sigma");
  synth->add_option("--angles", synth_flags.angles,
                    "comma-separated camera shift angles in radians (default: even spacing)");
  synth->add_option("--seed", synth_flags.seed, "random seed");
  synth->add_option("--out", synth_flags.out, "output directory");

  TrainFlags train_flags;
  CLI::App* train = app.add_subcommand("train", "learn pairwise metrics between cameras");
  train->add_option("--manifest", train_flags.manifest, "dataset manifest path")->required();
  train->add_option("--cameras", train_flags.cameras,
                    "comma-separated camera ids (default: all in manifest)");
  train->add_option("--metric", train_flags.metric, "metric method")
      ->check(CLI::IsMember({"kissme", "ldml"}));
  train->add_option("--seed", train_flags.seed, "random seed");
  train->add_option("--out", train_flags.out, "output directory");

  AddCameraFlags add_flags;
  CLI::App* add = app.add_subcommand("add-camera", "rank sources and build kernels for new cameras");
  add->add_option("--manifest", add_flags.manifest, "dataset manifest path")->required();
  add->add_option("--target", add_flags.targets, "target camera id (repeatable)")->required();
  add->add_option("--multi", add_flags.multi, "common | per-target best source");
  add->add_option("--subspace-dim", add_flags.subspace_dim, "subspace dimension");
  add->add_option("--seed", add_flags.seed, "random seed");
  add->add_option("--out", add_flags.out, "output directory");

  EvaluateFlags eval_flags;
  CLI::App* evaluate = app.add_subcommand("evaluate", "run scoring experiments");
  evaluate->add_option("--manifest", eval_flags.manifest, "dataset manifest path")->required();
  evaluate->add_option("--target", eval_flags.targets, "target camera id (repeatable)")->required();
  evaluate->add_option("--mode,--modes", eval_flags.modes,
                       "comma-separated modes: ours|direct|best|semi|euclidean");
  evaluate->add_option("--metric", eval_flags.metric, "metric method")
      ->check(CLI::IsMember({"kissme", "ldml"}));
  evaluate->add_option("--subspace-dim", eval_flags.subspace_dim, "subspace dimension");
  evaluate->add_option("--dim", eval_flags.dim,
                       "PCA-reduce features to this dimension first (0 = off)");
  evaluate->add_option("--trials", eval_flags.trials, "number of split trials");
  evaluate->add_option("--train-fraction", eval_flags.train_fraction, "identity train fraction");
  evaluate->add_option("--images-per-identity", eval_flags.images_per_identity,
                       "images kept per identity per camera");
  evaluate->add_option("--semi-fraction", eval_flags.semi_fraction,
                       "labeled fraction of target train identities (semi mode)");
  evaluate->add_option("--seed", eval_flags.seed, "random seed");
  evaluate->add_option("--out", eval_flags.out, "output directory");

  ReportFlags report_flags;
  CLI::App* report = app.add_subcommand("report", "rebuild tables from saved reports");
  report->add_option("inputs", report_flags.inputs, "report JSON files")->required();
  report->add_option("--out", report_flags.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage problems exit 2, help exits 0
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_flags);
    if (train->parsed()) return cmd_train(train_flags);
    if (add->parsed()) return cmd_add_camera(add_flags);
    if (evaluate->parsed()) return cmd_evaluate(eval_flags);
    if (report->parsed()) return cmd_report(report_flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
