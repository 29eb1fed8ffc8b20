#include "camadapt/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <map>
#include <set>
#include <utility>

#include "camadapt/error.hpp"
#include "camadapt/jsonio.hpp"
#include "camadapt/rng.hpp"

namespace camadapt {

std::vector<int> match_rank(const Matrix& scores, const std::vector<std::string>& probe_ids,
                            const std::vector<std::string>& gallery_ids) {
  if (scores.rows() != static_cast<Eigen::Index>(probe_ids.size()) ||
      scores.cols() != static_cast<Eigen::Index>(gallery_ids.size())) {
    fail(Errc::dimension_mismatch, "score matrix shape does not match id lists");
  }

  std::map<std::string, std::vector<Eigen::Index>> gallery_columns;
  for (std::size_t j = 0; j < gallery_ids.size(); ++j) {
    gallery_columns[gallery_ids[j]].push_back(static_cast<Eigen::Index>(j));
  }

  std::vector<int> ranks(probe_ids.size());
  for (std::size_t i = 0; i < probe_ids.size(); ++i) {
    auto correct_it = gallery_columns.find(probe_ids[i]);
    if (correct_it == gallery_columns.end()) {
      fail(Errc::probe_identity_missing,
           "probe identity " + probe_ids[i] + " has no gallery image");
    }
    // Multi-shot rule: an identity scores via its best (lowest) image.
    auto identity_score = [&](const std::vector<Eigen::Index>& cols) {
      double best = scores(static_cast<Eigen::Index>(i), cols[0]);
      for (Eigen::Index c : cols) {
        best = std::min(best, scores(static_cast<Eigen::Index>(i), c));
      }
      return best;
    };
    const double correct = identity_score(correct_it->second);
    int rank = 1;
    for (const auto& [person, cols] : gallery_columns) {
      if (person == probe_ids[i]) continue;
      if (identity_score(cols) <= correct) ++rank;  // ties count against the probe
    }
    ranks[i] = rank;
  }
  return ranks;
}

CmcCurve cmc(const std::vector<int>& ranks, int gallery_identities) {
  if (ranks.empty()) fail(Errc::empty_input, "cmc needs at least one rank");
  if (gallery_identities < 1) fail(Errc::invalid_config, "gallery must hold an identity");

  CmcCurve curve;
  curve.rates = Vector::Zero(gallery_identities);
  for (int r : ranks) {
    if (r < 1 || r > gallery_identities) {
      fail(Errc::out_of_range, "rank outside 1..G");
    }
    curve.rates[r - 1] += 1.0;
  }
  const double n = static_cast<double>(ranks.size());
  double cumulative = 0.0;
  for (int k = 0; k < gallery_identities; ++k) {
    cumulative += curve.rates[k];
    curve.rates[k] = cumulative / n;
  }
  curve.nauc = curve.rates.mean();
  return curve;
}

std::string eval_mode_name(EvalMode mode, double semi_fraction) {
  switch (mode) {
    case EvalMode::ours_unsup: return "ours_unsup";
    case EvalMode::direct_gfk: return "direct_gfk";
    case EvalMode::best_gfk: return "best_gfk";
    case EvalMode::euclidean_baseline: return "euclidean_baseline";
    case EvalMode::ours_semi: return "ours_semi(" + format_double(semi_fraction) + ")";
  }
  fail(Errc::invalid_config, "unknown evaluation mode");
}

namespace {

std::string metric_method_name(MetricMethod m) {
  return m == MetricMethod::kissme ? "kissme" : "ldml";
}

LabeledSet reduce_set(const LabeledSet& set, const LinearReducer* reducer) {
  if (reducer == nullptr) return set;
  return LabeledSet{reducer->apply_rows(set.features), set.person_ids, set.image_ids};
}

// Probes whose identity is absent from the gallery cannot be ranked and are
// dropped before scoring.
CmcCurve score_direction(const Kernel& kernel, const LabeledSet& probe_set,
                         const LabeledSet& gallery_set) {
  std::set<std::string> gallery_identities(gallery_set.person_ids.begin(),
                                           gallery_set.person_ids.end());
  std::vector<Eigen::Index> keep;
  for (std::size_t i = 0; i < probe_set.person_ids.size(); ++i) {
    if (gallery_identities.count(probe_set.person_ids[i]) > 0) {
      keep.push_back(static_cast<Eigen::Index>(i));
    }
  }
  if (keep.empty()) fail(Errc::empty_input, "no probe shares an identity with the gallery");

  Matrix probes(static_cast<Eigen::Index>(keep.size()), probe_set.features.cols());
  std::vector<std::string> probe_ids(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    probes.row(static_cast<Eigen::Index>(i)) = probe_set.features.row(keep[i]);
    probe_ids[i] = probe_set.person_ids[static_cast<std::size_t>(keep[i])];
  }

  Matrix scores = kernel_distance(kernel, probes, gallery_set.features);
  std::vector<int> ranks = match_rank(scores, probe_ids, gallery_set.person_ids);
  return cmc(ranks, static_cast<int>(gallery_identities.size()));
}

// Elementwise mean; shorter curves continue at 1.0 (a match is always within
// the top G of its own gallery), so mixed gallery sizes stay well-defined.
CmcCurve mean_curve_of(const std::vector<CmcCurve>& curves) {
  Eigen::Index len = 0;
  for (const CmcCurve& c : curves) len = std::max(len, c.rates.size());
  CmcCurve mean;
  mean.rates = Vector::Zero(len);
  for (const CmcCurve& c : curves) {
    for (Eigen::Index k = 0; k < len; ++k) {
      mean.rates[k] += k < c.rates.size() ? c.rates[k] : 1.0;
    }
  }
  mean.rates /= static_cast<double>(curves.size());
  mean.nauc = len > 0 ? mean.rates.mean() : 0.0;
  return mean;
}

using DirectionKey = std::pair<std::string, std::string>;  // probe, gallery

struct TrialOutput {
  std::vector<BestSourcePick> picks;
  std::vector<std::pair<DirectionKey, CmcCurve>> curves;
};

struct TrialContext {
  const NetworkDataset& dataset;
  const EvalConfig& config;
  const std::vector<std::string>& source_ids;  // sorted
  const LinearReducer* reducer;                // nullptr when not reducing
  int scoring_dim;
};

TrialOutput run_trial(const TrialContext& ctx, const Split& split) {
  const EvalConfig& cfg = ctx.config;
  TrialOutput out;

  std::map<std::string, LabeledSet> source_train;
  for (const std::string& cam : ctx.source_ids) {
    source_train.emplace(
        cam, reduce_set(camera_samples(ctx.dataset, cam, split.train_ids, split), ctx.reducer));
  }

  const bool needs_metrics =
      cfg.mode == EvalMode::ours_unsup || cfg.mode == EvalMode::ours_semi;
  std::map<CameraPair, Metric> metrics;
  if (needs_metrics) {
    for (std::size_t i = 0; i < ctx.source_ids.size(); ++i) {
      for (std::size_t j = i + 1; j < ctx.source_ids.size(); ++j) {
        const std::string& a = ctx.source_ids[i];
        const std::string& b = ctx.source_ids[j];
        PairOptions po;
        po.seed = derive_seed(cfg.split.seed, hash_str("pair-cap") ^ hash_str(a) ^ hash_str(b),
                              static_cast<std::uint64_t>(split.trial_index));
        PairSet pairs = build_pairs(source_train.at(a), source_train.at(b), split.train_ids, po);
        Metric m = cfg.metric_method == MetricMethod::kissme ? kissme_fit(pairs)
                                                             : ldml_fit(pairs);
        m.source_camera = a;
        m.dest_camera = b;
        metrics.emplace(make_camera_pair(a, b), std::move(m));
      }
    }
  }

  std::vector<SourceCamera> sources;
  sources.reserve(ctx.source_ids.size());
  for (const std::string& cam : ctx.source_ids) {
    sources.push_back({cam, source_train.at(cam)});
  }

  for (const std::string& target : cfg.target_cameras) {
    LabeledSet target_train_labeled =
        reduce_set(camera_samples(ctx.dataset, target, split.train_ids, split), ctx.reducer);
    UnlabeledSet target_train = strip_labels(target_train_labeled);

    // Which kernel scores each (source, target) pair, per mode.
    std::map<std::string, Kernel> pair_kernels;
    if (cfg.mode == EvalMode::euclidean_baseline) {
      for (const std::string& cam : ctx.source_ids) {
        Kernel identity;
        identity.matrix = Matrix::Identity(ctx.scoring_dim, ctx.scoring_dim);
        identity.source_camera = cam;
        identity.target_camera = target;
        pair_kernels.emplace(cam, std::move(identity));
      }
    } else {
      DiscoveryResult discovery;
      if (cfg.mode == EvalMode::ours_semi) {
        // Supervised target subspace from a seeded fraction of the train
        // identities; distances still use the full unlabeled train set.
        std::vector<std::string> train_ids(split.train_ids.begin(), split.train_ids.end());
        Rng rng(derive_seed(cfg.split.seed, hash_str("semi-labels") ^ hash_str(target),
                            static_cast<std::uint64_t>(split.trial_index)));
        rng.shuffle(train_ids);
        const auto labeled_count = static_cast<std::size_t>(
            cfg.semi_fraction * static_cast<double>(train_ids.size()));
        std::set<std::string> labeled_ids(train_ids.begin(),
                                          train_ids.begin() + static_cast<std::ptrdiff_t>(
                                                                  labeled_count));
        LabeledSet labeled = reduce_set(
            camera_samples(ctx.dataset, target, labeled_ids, split), ctx.reducer);
        Subspace target_subspace =
            pls_subspace(labeled.features, labeled.person_ids, cfg.subspace_dim, target);
        discovery = discover_best_source(sources, target_subspace, target_train,
                                         cfg.subspace_dim);
      } else {
        discovery = discover_best_source(sources, target_train, cfg.subspace_dim, target);
      }
      out.picks.push_back({split.trial_index, target, discovery.ranking.best_source});

      switch (cfg.mode) {
        case EvalMode::ours_unsup:
        case EvalMode::ours_semi: {
          auto scorers = assemble_network_kernels(discovery.ranking, discovery.kernels, metrics);
          for (const std::string& cam : ctx.source_ids) {
            pair_kernels.emplace(cam, scorers.at(make_camera_pair(cam, target)).kernel);
          }
          break;
        }
        case EvalMode::direct_gfk:
          pair_kernels = discovery.kernels;
          break;
        case EvalMode::best_gfk: {
          const Kernel& best = discovery.kernels.at(discovery.ranking.best_source);
          for (const std::string& cam : ctx.source_ids) pair_kernels.emplace(cam, best);
          break;
        }
        default: break;
      }
    }

    LabeledSet target_test =
        reduce_set(camera_samples(ctx.dataset, target, split.test_ids, split), ctx.reducer);
    for (const std::string& cam : ctx.source_ids) {
      LabeledSet source_test =
          reduce_set(camera_samples(ctx.dataset, cam, split.test_ids, split), ctx.reducer);
      const Kernel& kernel = pair_kernels.at(cam);
      out.curves.emplace_back(DirectionKey{cam, target},
                              score_direction(kernel, source_test, target_test));
      out.curves.emplace_back(DirectionKey{target, cam},
                              score_direction(kernel, target_test, source_test));
    }
  }
  return out;
}

}  // namespace

ExperimentReport run_experiment(const NetworkDataset& dataset, const EvalConfig& config) {
  if (config.target_cameras.empty()) {
    fail(Errc::no_targets, "run_experiment needs at least one target camera");
  }
  std::set<std::string> camera_set(dataset.cameras.begin(), dataset.cameras.end());
  for (const std::string& t : config.target_cameras) {
    if (camera_set.count(t) == 0) fail(Errc::invalid_config, "unknown target camera: " + t);
  }
  std::vector<std::string> source_ids;
  std::set<std::string> target_set(config.target_cameras.begin(), config.target_cameras.end());
  for (const std::string& cam : dataset.cameras) {
    if (target_set.count(cam) == 0) source_ids.push_back(cam);
  }
  std::sort(source_ids.begin(), source_ids.end());
  if (source_ids.empty()) fail(Errc::no_sources, "no installed camera left to adapt from");

  const bool reduce = config.reduce_dim > 0 && config.reduce_dim < dataset.dimension;
  LinearReducer reducer;
  if (reduce) {
    // Unsupervised preprocessing on installed cameras only; the new camera
    // plays no part in fitting.
    reducer = fit_pca_reducer(dataset, {source_ids.begin(), source_ids.end()},
                              config.reduce_dim);
  }

  TrialContext ctx{dataset, config, source_ids, reduce ? &reducer : nullptr,
                   reduce ? config.reduce_dim : dataset.dimension};

  std::vector<Split> splits = make_splits(dataset, config.split);
  std::vector<TrialOutput> outputs(splits.size());
  std::vector<std::exception_ptr> errors(splits.size());
  const auto n_trials = static_cast<std::ptrdiff_t>(splits.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t t = 0; t < n_trials; ++t) {
    try {
      outputs[static_cast<std::size_t>(t)] = run_trial(ctx, splits[static_cast<std::size_t>(t)]);
    } catch (...) {
      errors[static_cast<std::size_t>(t)] = std::current_exception();
    }
  }
  for (const std::exception_ptr& err : errors) {
    if (err) std::rethrow_exception(err);
  }

  ExperimentReport report;
  report.mode_name = eval_mode_name(config.mode, config.semi_fraction);
  report.metric_method = config.metric_method;
  report.subspace_dim = config.subspace_dim;
  report.feature_dim = ctx.scoring_dim;
  report.reduce_dim = config.reduce_dim;
  report.semi_fraction = config.mode == EvalMode::ours_semi ? config.semi_fraction : 0.0;
  report.split = config.split;
  report.target_cameras = config.target_cameras;
  report.gfk_scale_constant = kGfkScaleConstant;

  // Deterministic ordered reduction: trial index first, then direction key.
  std::map<DirectionKey, std::vector<CmcCurve>> by_direction;
  for (TrialOutput& out : outputs) {
    report.best_sources.insert(report.best_sources.end(), out.picks.begin(), out.picks.end());
    for (auto& [key, curve] : out.curves) {
      by_direction[key].push_back(std::move(curve));
    }
  }
  for (auto& [key, curves] : by_direction) {
    DirectionResult dir;
    dir.probe_camera = key.first;
    dir.gallery_camera = key.second;
    dir.mean_curve = mean_curve_of(curves);
    dir.trial_curves = std::move(curves);
    report.directions.push_back(std::move(dir));
  }
  return report;
}

namespace {

double sample_stddev(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

void require_compatible(const ExperimentReport& a, const ExperimentReport& b) {
  const bool ok = a.subspace_dim == b.subspace_dim && a.feature_dim == b.feature_dim &&
                  a.reduce_dim == b.reduce_dim && a.split.seed == b.split.seed &&
                  a.split.trials == b.split.trials &&
                  a.split.train_fraction == b.split.train_fraction &&
                  a.split.images_per_identity == b.split.images_per_identity &&
                  a.target_cameras == b.target_cameras;
  if (!ok) fail(Errc::incompatible_reports, "reports ran on different data or splits");
}

double rate_at(const CmcCurve& curve, Eigen::Index k) {
  if (curve.rates.size() == 0) return 0.0;
  return curve.rates[std::min(k, curve.rates.size() - 1)];
}

}  // namespace

std::vector<ComparisonRow> compare_modes(const std::vector<ExperimentReport>& reports) {
  std::vector<ComparisonRow> rows;
  for (const ExperimentReport& report : reports) {
    require_compatible(reports.front(), report);

    std::map<std::string, std::vector<const DirectionResult*>> pairs;
    for (const DirectionResult& dir : report.directions) {
      CameraPair key = make_camera_pair(dir.probe_camera, dir.gallery_camera);
      pairs[key.first + "|" + key.second].push_back(&dir);
    }

    for (const auto& [pair_name, dirs] : pairs) {
      ComparisonRow row;
      row.mode = report.mode_name;
      row.pair = pair_name;
      const double n_dirs = static_cast<double>(dirs.size());
      std::vector<double> trial_rank1;
      for (const DirectionResult* dir : dirs) {
        row.rank1 += rate_at(dir->mean_curve, 0) / n_dirs;
        row.rank5 += rate_at(dir->mean_curve, 4) / n_dirs;
        row.rank10 += rate_at(dir->mean_curve, 9) / n_dirs;
        row.nauc += dir->mean_curve.nauc / n_dirs;
        if (trial_rank1.empty()) trial_rank1.resize(dir->trial_curves.size(), 0.0);
        for (std::size_t t = 0; t < dir->trial_curves.size(); ++t) {
          trial_rank1[t] += rate_at(dir->trial_curves[t], 0) / n_dirs;
        }
      }
      row.stddev_rank1 = sample_stddev(trial_rank1);
      rows.push_back(std::move(row));
    }
  }
  std::sort(rows.begin(), rows.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
    if (a.mode != b.mode) return a.mode < b.mode;
    return a.pair < b.pair;
  });
  return rows;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::string csv = "mode,pair,rank1,rank5,rank10,nauc,stddev_rank1\n";
  for (const ComparisonRow& row : rows) {
    csv += row.mode + "," + row.pair + "," + format_double(row.rank1) + "," +
           format_double(row.rank5) + "," + format_double(row.rank10) + "," +
           format_double(row.nauc) + "," + format_double(row.stddev_rank1) + "\n";
  }
  return csv;
}

std::string curve_csv(const CmcCurve& curve) {
  std::string csv = "rank,rate\n";
  for (Eigen::Index k = 0; k < curve.rates.size(); ++k) {
    csv += std::to_string(k + 1) + "," + format_double(curve.rates[k]) + "\n";
  }
  return csv;
}

namespace {

Json curve_to_json(const CmcCurve& curve) {
  Json j;
  j["nauc"] = curve.nauc;
  j["rates"] = vector_to_json(curve.rates);
  return j;
}

CmcCurve curve_from_json(const Json& j) {
  CmcCurve c;
  c.nauc = j.at("nauc").get<double>();
  c.rates = vector_from_json(j.at("rates"));
  return c;
}

}  // namespace

void save_report(const ExperimentReport& report, const std::filesystem::path& path) {
  Json j;
  Json config;
  config["mode"] = report.mode_name;
  config["metric"] = metric_method_name(report.metric_method);
  config["subspace_dim"] = report.subspace_dim;
  config["feature_dim"] = report.feature_dim;
  config["reduce_dim"] = report.reduce_dim;
  config["semi_fraction"] = report.semi_fraction;
  config["seed"] = report.split.seed;
  config["trials"] = report.split.trials;
  config["train_fraction"] = report.split.train_fraction;
  config["images_per_identity"] = report.split.images_per_identity;
  config["targets"] = report.target_cameras;
  j["config"] = std::move(config);
  j["gfk_scale_constant"] = report.gfk_scale_constant;

  j["best_sources"] = Json::array();
  for (const BestSourcePick& pick : report.best_sources) {
    Json p;
    p["trial"] = pick.trial;
    p["target"] = pick.target_camera;
    p["best"] = pick.best_source;
    j["best_sources"].push_back(std::move(p));
  }

  j["directions"] = Json::array();
  for (const DirectionResult& dir : report.directions) {
    Json d;
    d["probe"] = dir.probe_camera;
    d["gallery"] = dir.gallery_camera;
    d["mean"] = curve_to_json(dir.mean_curve);
    d["trials"] = Json::array();
    for (std::size_t t = 0; t < dir.trial_curves.size(); ++t) {
      Json tc = curve_to_json(dir.trial_curves[t]);
      tc["trial"] = static_cast<int>(t);
      d["trials"].push_back(std::move(tc));
    }
    j["directions"].push_back(std::move(d));
  }
  write_json_file(path, j);
}

ExperimentReport load_report(const std::filesystem::path& path) {
  Json j = read_json_file(path);
  const Json& config = j.at("config");
  ExperimentReport report;
  report.mode_name = config.at("mode").get<std::string>();
  const std::string metric = config.at("metric").get<std::string>();
  report.metric_method = metric == "ldml" ? MetricMethod::ldml : MetricMethod::kissme;
  report.subspace_dim = config.at("subspace_dim").get<int>();
  report.feature_dim = config.at("feature_dim").get<int>();
  report.reduce_dim = config.at("reduce_dim").get<int>();
  report.semi_fraction = config.at("semi_fraction").get<double>();
  report.split.seed = config.at("seed").get<std::uint64_t>();
  report.split.trials = config.at("trials").get<int>();
  report.split.train_fraction = config.at("train_fraction").get<double>();
  report.split.images_per_identity = config.at("images_per_identity").get<int>();
  report.target_cameras = config.at("targets").get<std::vector<std::string>>();
  report.gfk_scale_constant = j.at("gfk_scale_constant").get<double>();

  for (const Json& p : j.at("best_sources")) {
    report.best_sources.push_back({p.at("trial").get<int>(),
                                   p.at("target").get<std::string>(),
                                   p.at("best").get<std::string>()});
  }
  for (const Json& d : j.at("directions")) {
    DirectionResult dir;
    dir.probe_camera = d.at("probe").get<std::string>();
    dir.gallery_camera = d.at("gallery").get<std::string>();
    dir.mean_curve = curve_from_json(d.at("mean"));
    for (const Json& tc : d.at("trials")) {
      dir.trial_curves.push_back(curve_from_json(tc));
    }
    report.directions.push_back(std::move(dir));
  }
  return report;
}

}  // namespace camadapt
