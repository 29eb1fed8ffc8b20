#include "camadapt/dataio.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <unordered_set>

#include "camadapt/error.hpp"
#include "camadapt/jsonio.hpp"
#include "camadapt/rng.hpp"

namespace camadapt {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

double parse_feature(const std::string& tok, const std::string& where) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    fail(Errc::io_error, where + ": cannot parse feature value '" + tok + "'");
  return v;
}

void load_camera_csv(const std::filesystem::path& path, const std::string& camera_id, int dim,
                     std::vector<Sample>& out, std::unordered_set<std::string>& keys) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::missing_file, "feature file not found: " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) continue;  // header
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (static_cast<int>(fields.size()) != dim + 2)
      fail(Errc::dimension_mismatch,
           where + ": expected " + std::to_string(dim + 2) + " fields, got " +
               std::to_string(fields.size()));
    Sample s;
    s.camera_id = camera_id;
    s.person_id = fields[0];
    s.image_id = fields[1];
    s.features.resize(dim);
    for (int k = 0; k < dim; ++k) {
      double v = parse_feature(fields[k + 2], where);
      if (!std::isfinite(v)) fail(Errc::non_finite_feature, where + ": non-finite feature");
      s.features(k) = v;
    }
    std::string key = s.camera_id + "\x1f" + s.person_id + "\x1f" + s.image_id;
    if (!keys.insert(std::move(key)).second)
      fail(Errc::duplicate_sample_key,
           where + ": duplicate sample (" + camera_id + ", " + s.person_id + ", " + s.image_id + ")");
    out.push_back(std::move(s));
  }
}

}  // namespace

NetworkDataset load_dataset(const std::filesystem::path& manifest_path) {
  Json manifest = read_json_file(manifest_path);
  NetworkDataset ds;
  if (!manifest.contains("dimension") || !manifest.contains("cameras"))
    fail(Errc::io_error, manifest_path.string() + ": manifest needs 'dimension' and 'cameras'");
  ds.dimension = manifest["dimension"].get<int>();
  if (ds.dimension <= 0) fail(Errc::io_error, "manifest dimension must be positive");
  const auto base = manifest_path.parent_path();
  std::unordered_set<std::string> keys;
  for (const auto& cam : manifest["cameras"]) {
    std::string id = cam["id"].get<std::string>();
    if (std::find(ds.cameras.begin(), ds.cameras.end(), id) != ds.cameras.end())
      fail(Errc::io_error, "manifest lists camera '" + id + "' twice");
    ds.cameras.push_back(id);
    load_camera_csv(base / cam["file"].get<std::string>(), id, ds.dimension, ds.samples, keys);
  }
  return ds;
}

void write_dataset(const NetworkDataset& ds, const std::filesystem::path& dir,
                   const std::string& manifest_name) {
  std::filesystem::create_directories(dir);
  Json manifest;
  manifest["dimension"] = ds.dimension;
  Json cams = Json::array();
  for (const auto& cam : ds.cameras) {
    std::string file = "camera_" + cam + ".csv";
    cams.push_back(Json{{"id", cam}, {"file", file}});
    std::string csv;
    csv.reserve(ds.samples.size() * 16);
    csv += "person_id,image_id";
    for (int k = 0; k < ds.dimension; ++k) csv += ",f" + std::to_string(k);
    csv += "\n";
    for (const auto& s : ds.samples) {
      if (s.camera_id != cam) continue;
      csv += s.person_id;
      csv += ",";
      csv += s.image_id;
      for (int k = 0; k < ds.dimension; ++k) {
        csv += ",";
        csv += format_double(s.features(k));
      }
      csv += "\n";
    }
    write_text_file(dir / file, csv);
  }
  manifest["cameras"] = std::move(cams);
  write_json_file(dir / manifest_name, manifest);
}

LinearReducer fit_pca_reducer(const NetworkDataset& ds, const std::set<std::string>& camera_subset,
                              int out_dim) {
  if (camera_subset.empty()) fail(Errc::invalid_config, "fit_pca_reducer: empty camera subset");
  const int d_raw = ds.dimension;
  std::vector<const Sample*> rows;
  for (const auto& s : ds.samples)
    if (camera_subset.count(s.camera_id)) rows.push_back(&s);
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (out_dim <= 0 || out_dim > d_raw || n < out_dim)
    fail(Errc::rank_deficient, "fit_pca_reducer: out_dim " + std::to_string(out_dim) +
                                   " exceeds data (n=" + std::to_string(n) + ", D=" +
                                   std::to_string(d_raw) + ")");

  Vector mean = Vector::Zero(d_raw);
  for (const Sample* s : rows) mean += s->features;
  mean /= static_cast<double>(n);

  Matrix cov = Matrix::Zero(d_raw, d_raw);
  for (const Sample* s : rows) {
    Vector c = s->features - mean;
    cov.selfadjointView<Eigen::Lower>().rankUpdate(c, 1.0);
  }
  cov = cov.selfadjointView<Eigen::Lower>();
  cov /= static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  // eigenvalues ascending; take the top out_dim
  const double lmax = std::max(es.eigenvalues().maxCoeff(), 0.0);
  const double rank_tol = lmax * 1e-12;
  Matrix proj(d_raw, out_dim);
  for (int j = 0; j < out_dim; ++j) {
    const Eigen::Index src = d_raw - 1 - j;
    if (es.eigenvalues()(src) <= rank_tol)
      fail(Errc::rank_deficient, "fit_pca_reducer: data rank below out_dim, lower out_dim");
    proj.col(j) = es.eigenvectors().col(src);
    Eigen::Index argmax = 0;
    proj.col(j).cwiseAbs().maxCoeff(&argmax);
    if (proj(argmax, j) < 0) proj.col(j) = -proj.col(j);
  }
  return LinearReducer{std::move(mean), std::move(proj)};
}

std::vector<std::string> sorted_identities(const NetworkDataset& ds) {
  std::set<std::string> ids;
  for (const auto& s : ds.samples) ids.insert(s.person_id);
  return {ids.begin(), ids.end()};
}

std::vector<Split> make_splits(const NetworkDataset& ds, const SplitSpec& spec) {
  auto identities = sorted_identities(ds);
  if (identities.size() < 2) fail(Errc::not_enough_identities, "make_splits: need >= 2 identities");
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
    fail(Errc::invalid_config, "train_fraction must be in (0,1)");

  // image ids available per (person, camera), in sorted order for determinism
  std::map<std::pair<std::string, std::string>, std::vector<std::string>> images;
  for (const auto& s : ds.samples) images[{s.person_id, s.camera_id}].push_back(s.image_id);
  for (auto& [key, v] : images) std::sort(v.begin(), v.end());

  std::vector<Split> splits;
  splits.reserve(spec.trials);
  for (int t = 0; t < spec.trials; ++t) {
    Rng rng(derive_seed(spec.seed, 0x5A11D5ULL, static_cast<std::uint64_t>(t)));
    auto shuffled = identities;
    rng.shuffle(shuffled);
    const auto n_train =
        static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(shuffled.size())));
    Split sp;
    sp.trial_index = t;
    sp.train_ids.insert(shuffled.begin(), shuffled.begin() + n_train);
    sp.test_ids.insert(shuffled.begin() + n_train, shuffled.end());
    for (const auto& [key, avail] : images) {
      auto chosen = avail;
      if (static_cast<int>(chosen.size()) > spec.images_per_identity) {
        rng.shuffle(chosen);
        chosen.resize(spec.images_per_identity);
        std::sort(chosen.begin(), chosen.end());
      }
      sp.selected_images[key] = std::move(chosen);
    }
    splits.push_back(std::move(sp));
  }
  return splits;
}

void save_reducer(const LinearReducer& r, const std::filesystem::path& path) {
  Json j;
  j["mean"] = vector_to_json(r.mean);
  j["projection"] = matrix_to_json(r.projection);
  write_json_file(path, j);
}

LinearReducer load_reducer(const std::filesystem::path& path) {
  Json j = read_json_file(path);
  return LinearReducer{vector_from_json(j["mean"]), matrix_from_json(j["projection"])};
}

namespace {

LabeledSet gather(const NetworkDataset& ds, const std::string& camera_id,
                  const std::function<bool(const Sample&)>& keep) {
  std::vector<const Sample*> rows;
  for (const auto& s : ds.samples)
    if (s.camera_id == camera_id && keep(s)) rows.push_back(&s);
  LabeledSet out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), ds.dimension);
  out.person_ids.reserve(rows.size());
  out.image_ids.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = rows[i]->features.transpose();
    out.person_ids.push_back(rows[i]->person_id);
    out.image_ids.push_back(rows[i]->image_id);
  }
  return out;
}

}  // namespace

LabeledSet camera_samples(const NetworkDataset& ds, const std::string& camera_id) {
  return gather(ds, camera_id, [](const Sample&) { return true; });
}

LabeledSet camera_samples(const NetworkDataset& ds, const std::string& camera_id,
                          const std::set<std::string>& identity_filter, const Split& split) {
  return gather(ds, camera_id, [&](const Sample& s) {
    if (!identity_filter.count(s.person_id)) return false;
    auto it = split.selected_images.find({s.person_id, s.camera_id});
    if (it == split.selected_images.end()) return false;
    return std::binary_search(it->second.begin(), it->second.end(), s.image_id);
  });
}

}  // namespace camadapt
