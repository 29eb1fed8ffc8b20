#include "camadapt/metric.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <vector>

#include "camadapt/error.hpp"
#include "camadapt/jsonio.hpp"
#include "camadapt/rng.hpp"

namespace camadapt {
namespace {

// Indices of rows whose person id is in the training split, bucketed by id.
std::map<std::string, std::vector<Eigen::Index>> bucket_rows(
    const LabeledSet& set, const std::set<std::string>& train_ids) {
  std::map<std::string, std::vector<Eigen::Index>> buckets;
  for (Eigen::Index i = 0; i < set.features.rows(); ++i) {
    if (train_ids.count(set.person_ids[static_cast<std::size_t>(i)]) > 0) {
      buckets[set.person_ids[static_cast<std::size_t>(i)]].push_back(i);
    }
  }
  return buckets;
}

// Floyd's sampling: k distinct values from [0, total), then sorted so the
// subsample order is independent of set iteration details.
std::vector<std::uint64_t> sample_distinct(std::uint64_t total, std::uint64_t k, Rng& rng) {
  std::set<std::uint64_t> chosen;
  for (std::uint64_t t = total - k; t < total; ++t) {
    std::uint64_t r = rng.below(t + 1);
    if (!chosen.insert(r).second) chosen.insert(t);
  }
  return {chosen.begin(), chosen.end()};
}

double softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

}  // namespace

PairSet build_pairs(const LabeledSet& samples_a, const LabeledSet& samples_b,
                    const std::set<std::string>& train_ids, const PairOptions& opts) {
  if (samples_a.features.cols() != samples_b.features.cols()) {
    fail(Errc::dimension_mismatch, "pair sets have different feature dimensions");
  }
  if (opts.ratio_cap < 1) fail(Errc::invalid_config, "ratio_cap must be at least 1");
  const auto buckets_a = bucket_rows(samples_a, train_ids);
  const auto buckets_b = bucket_rows(samples_b, train_ids);

  std::vector<Eigen::Index> rows_a;
  std::vector<Eigen::Index> rows_b;
  std::vector<const std::string*> ids_a;
  std::vector<const std::string*> ids_b;
  for (const auto& [id, rows] : buckets_a) {
    for (Eigen::Index r : rows) {
      rows_a.push_back(r);
      ids_a.push_back(&id);
    }
  }
  for (const auto& [id, rows] : buckets_b) {
    for (Eigen::Index r : rows) {
      rows_b.push_back(r);
      ids_b.push_back(&id);
    }
  }

  std::uint64_t n_similar = 0;
  for (const auto& [id, rows] : buckets_a) {
    auto it = buckets_b.find(id);
    if (it != buckets_b.end()) n_similar += rows.size() * it->second.size();
  }
  if (n_similar == 0) {
    fail(Errc::no_similar_pairs, "cameras share no training identities");
  }
  const std::uint64_t n_cross = static_cast<std::uint64_t>(rows_a.size()) * rows_b.size();
  const std::uint64_t n_dissimilar_all = n_cross - n_similar;
  const std::uint64_t cap = n_similar * static_cast<std::uint64_t>(opts.ratio_cap);
  const std::uint64_t n_dissimilar = std::min(n_dissimilar_all, cap);

  const Eigen::Index dim = samples_a.features.cols();
  PairSet out;
  out.similar_diffs.resize(static_cast<Eigen::Index>(n_similar), dim);
  out.dissimilar_diffs.resize(static_cast<Eigen::Index>(n_dissimilar), dim);

  // Which cross-identity pairs survive, as sorted ordinals into the row-major
  // sweep below; empty sentinel means "keep everything".
  std::vector<std::uint64_t> keep;
  if (n_dissimilar < n_dissimilar_all) {
    Rng rng(derive_seed(opts.seed, hash_str("pair-subsample")));
    keep = sample_distinct(n_dissimilar_all, n_dissimilar, rng);
  }

  Eigen::Index sim_row = 0;
  Eigen::Index dis_row = 0;
  std::uint64_t dis_ordinal = 0;
  std::size_t keep_pos = 0;
  for (std::size_t i = 0; i < rows_a.size(); ++i) {
    for (std::size_t j = 0; j < rows_b.size(); ++j) {
      if (*ids_a[i] == *ids_b[j]) {
        out.similar_diffs.row(sim_row++) =
            samples_a.features.row(rows_a[i]) - samples_b.features.row(rows_b[j]);
        continue;
      }
      const bool wanted =
          keep.empty() || (keep_pos < keep.size() && keep[keep_pos] == dis_ordinal);
      if (wanted) {
        out.dissimilar_diffs.row(dis_row++) =
            samples_a.features.row(rows_a[i]) - samples_b.features.row(rows_b[j]);
        if (!keep.empty()) ++keep_pos;
      }
      ++dis_ordinal;
    }
  }
  return out;
}

Matrix psd_clip(const Matrix& m) {
  Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  Vector lambda = eig.eigenvalues().cwiseMax(0.0);
  return eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
}

namespace {

// Inverse of the ridged raw second-moment matrix of diff rows.
Matrix inverse_second_moment(const Matrix& diffs, double ridge) {
  const Eigen::Index dim = diffs.cols();
  const double n = static_cast<double>(diffs.rows());
  Matrix moment = Matrix::Zero(dim, dim);
  moment.selfadjointView<Eigen::Lower>().rankUpdate(diffs.transpose(), 1.0 / n);
  moment.triangularView<Eigen::StrictlyUpper>() = moment.transpose();
  moment.diagonal().array() += ridge * moment.trace() / static_cast<double>(dim);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(moment);
  if (eig.eigenvalues().minCoeff() <= 0.0) {
    fail(Errc::singular_covariance, "pair covariance is not invertible");
  }
  return eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
         eig.eigenvectors().transpose();
}

}  // namespace

Metric kissme_fit(const PairSet& pairs, double ridge) {
  if (pairs.similar_diffs.rows() == 0) fail(Errc::no_similar_pairs, "no similar pairs");
  if (pairs.dissimilar_diffs.rows() == 0) fail(Errc::empty_input, "no dissimilar pairs");
  if (pairs.similar_diffs.cols() != pairs.dissimilar_diffs.cols()) {
    fail(Errc::dimension_mismatch, "pair sets have different feature dimensions");
  }
  if (ridge < 0.0) fail(Errc::invalid_config, "ridge must be non-negative");

  Metric m;
  m.method = MetricMethod::kissme;
  m.matrix = psd_clip(inverse_second_moment(pairs.similar_diffs, ridge) -
                      inverse_second_moment(pairs.dissimilar_diffs, ridge));
  return m;
}

double ldml_log_likelihood(const Matrix& m, double bias, const PairSet& pairs) {
  // log sigmoid(z) = -softplus(-z); log(1 - sigmoid(z)) = -softplus(z).
  double ll = 0.0;
  for (Eigen::Index i = 0; i < pairs.similar_diffs.rows(); ++i) {
    const double q = pairs.similar_diffs.row(i) * m * pairs.similar_diffs.row(i).transpose();
    ll -= softplus(q - bias);
  }
  for (Eigen::Index i = 0; i < pairs.dissimilar_diffs.rows(); ++i) {
    const double q =
        pairs.dissimilar_diffs.row(i) * m * pairs.dissimilar_diffs.row(i).transpose();
    ll -= softplus(bias - q);
  }
  const double n =
      static_cast<double>(pairs.similar_diffs.rows() + pairs.dissimilar_diffs.rows());
  return ll / n;
}

Metric ldml_fit(const PairSet& pairs, const LdmlConfig& config) {
  if (pairs.similar_diffs.rows() == 0) fail(Errc::no_similar_pairs, "no similar pairs");
  if (pairs.dissimilar_diffs.rows() == 0) fail(Errc::empty_input, "no dissimilar pairs");
  if (config.learning_rate <= 0.0) fail(Errc::invalid_config, "learning_rate must be positive");
  if (config.max_iters < 0) fail(Errc::invalid_config, "max_iters must be non-negative");

  const Eigen::Index dim = pairs.similar_diffs.cols();
  const Matrix& xs = pairs.similar_diffs;
  const Matrix& xd = pairs.dissimilar_diffs;
  const double n = static_cast<double>(xs.rows() + xd.rows());

  Matrix m = Matrix::Identity(dim, dim);
  double bias = 1.0;
  double ll = ldml_log_likelihood(m, bias, pairs);
  if (!std::isfinite(ll)) fail(Errc::diverged, "initial likelihood is not finite");

  for (int iter = 0; iter < config.max_iters; ++iter) {
    // Residuals y - p with y = 1 for similar, 0 for dissimilar pairs.
    Vector qs = ((xs * m).array() * xs.array()).rowwise().sum();
    Vector qd = ((xd * m).array() * xd.array()).rowwise().sum();
    Vector ws(xs.rows());
    Vector wd(xd.rows());
    for (Eigen::Index i = 0; i < xs.rows(); ++i) {
      ws[i] = 1.0 / (1.0 + std::exp(-(qs[i] - bias)));  // 1 - sigmoid(bias - q)
    }
    for (Eigen::Index i = 0; i < xd.rows(); ++i) {
      wd[i] = -1.0 / (1.0 + std::exp(qd[i] - bias));  // -sigmoid(bias - q)
    }

    // q enters the similar-pair term as sigmoid(bias - q), so the chain rule
    // gives d ll / dM = -sum (y - p) x x^T / n and d ll / db = +sum (y - p) / n.
    Matrix grad_m = -(xs.transpose() * ws.asDiagonal() * xs +
                      xd.transpose() * wd.asDiagonal() * xd) /
                    n;
    const double grad_b = (ws.sum() + wd.sum()) / n;
    const double grad_norm = std::sqrt(grad_m.squaredNorm() + grad_b * grad_b);
    if (!std::isfinite(grad_norm)) fail(Errc::diverged, "gradient is not finite");
    if (grad_norm < config.tolerance) break;

    // Halving backtracking from the base rate; likelihood never decreases
    // across accepted steps.
    double step = config.learning_rate;
    bool accepted = false;
    for (int half = 0; half < 60; ++half) {
      Matrix m_next = m + step * grad_m;
      const double bias_next = bias + step * grad_b;
      const double ll_next = ldml_log_likelihood(m_next, bias_next, pairs);
      if (std::isfinite(ll_next) && ll_next >= ll) {
        m = std::move(m_next);
        bias = bias_next;
        ll = ll_next;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no ascent direction left at any step size
  }

  Metric out;
  out.method = MetricMethod::ldml;
  out.matrix = std::move(m);
  out.bias = bias;
  return out;
}

double mahalanobis(const Metric& metric, const Vector& x, const Vector& y) {
  if (x.size() != y.size() || x.size() != metric.matrix.rows()) {
    fail(Errc::dimension_mismatch, "vector size does not match metric");
  }
  Vector d = x - y;
  return d.dot(metric.matrix * d);
}

void save_metric(const Metric& m, const std::filesystem::path& path) {
  Json j;
  j["method"] = m.method == MetricMethod::kissme ? "kissme" : "ldml";
  j["source"] = m.source_camera;
  j["dest"] = m.dest_camera;
  j["bias"] = m.bias;
  j["matrix"] = matrix_to_json(m.matrix);
  write_json_file(path, j);
}

Metric load_metric(const std::filesystem::path& path) {
  Json j = read_json_file(path);
  Metric m;
  const std::string method = j.at("method").get<std::string>();
  if (method == "kissme") {
    m.method = MetricMethod::kissme;
  } else if (method == "ldml") {
    m.method = MetricMethod::ldml;
  } else {
    fail(Errc::invalid_config, "unknown metric method: " + method);
  }
  m.source_camera = j.at("source").get<std::string>();
  m.dest_camera = j.at("dest").get<std::string>();
  m.bias = j.at("bias").get<double>();
  m.matrix = matrix_from_json(j.at("matrix"));
  return m;
}

}  // namespace camadapt
