#include "lstmf/learn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "lstmf/error.hpp"
#include "lstmf/random.hpp"

namespace lstmf {

double BinarySvm::decision(std::span<const double> x) const {
  double s = bias;
  for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * x[i];
  return s;
}

BinarySvm train_binary(const SampleMatrix& x, std::span<const int> y, const SvmOptions& opt, std::uint64_t seed) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (static_cast<std::size_t>(n) != y.size()) fail(ErrorCode::kInvalidArgument, "train_binary: label count mismatch");
  bool pos = false, neg = false;
  for (int v : y) {
    if (v == 1)
      pos = true;
    else if (v == -1)
      neg = true;
    else
      fail(ErrorCode::kInvalidArgument, "train_binary: labels must be +1 or -1");
  }
  if (!pos || !neg) fail(ErrorCode::kInvalidArgument, "train_binary: both classes must be present");

  BinarySvm svm;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  double b = 0;
  std::vector<double> alpha(static_cast<std::size_t>(n), 0.0);
  std::vector<double> qd(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) qd[static_cast<std::size_t>(i)] = x.row(i).squaredNorm() + 1.0;

  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  const double C = opt.c;

  for (int epoch = 0; epoch < opt.max_epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    double max_violation = 0;
    for (std::size_t i : order) {
      const auto row = x.row(static_cast<Eigen::Index>(i));
      const double yi = y[i];
      const double g = yi * (row.dot(w.transpose()) + b) - 1.0;
      double& a = alpha[i];
      double pg = g;
      if (a == 0.0)
        pg = std::min(g, 0.0);
      else if (a == C)
        pg = std::max(g, 0.0);
      max_violation = std::max(max_violation, std::abs(pg));
      if (std::abs(pg) > 1e-12) {
        const double old = a;
        a = std::min(std::max(a - g / qd[i], 0.0), C);
        const double step = (a - old) * yi;
        w += step * row.transpose();
        b += step;
      }
    }
    const double asum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
    svm.dual_objective.push_back(0.5 * (w.squaredNorm() + b * b) - asum);
    svm.epochs = epoch + 1;
    if (max_violation < opt.epsilon) {
      svm.converged = true;
      break;
    }
  }
  svm.weights.assign(w.data(), w.data() + d);
  svm.bias = b;
  return svm;
}

std::vector<double> SvmModel::scores(std::span<const double> x) const {
  if (x.size() != dim()) fail(ErrorCode::kManifestMismatch, "representation dimension does not match the model");
  std::vector<double> s(labels.size());
  for (std::size_t c = 0; c < labels.size(); ++c) {
    double v = bias[c];
    const auto& wc = weights[c];
    for (std::size_t i = 0; i < wc.size(); ++i) v += wc[i] * x[i];
    s[c] = v;
  }
  return s;
}

const std::string& SvmModel::predict(std::span<const double> x) const {
  const auto s = scores(x);
  return labels[static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin())];
}

SvmModel train_ova(const SampleMatrix& x, const std::vector<std::vector<std::string>>& labels, const SvmOptions& opt,
                   std::uint64_t seed, int threads) {
  if (labels.size() != static_cast<std::size_t>(x.rows())) fail(ErrorCode::kInvalidArgument, "train_ova: label count mismatch");
  std::set<std::string> classes;
  for (const auto& ls : labels) classes.insert(ls.begin(), ls.end());
  if (classes.size() < 2) fail(ErrorCode::kInvalidArgument, "train_ova: need at least two classes");

  SvmModel model;
  model.c = opt.c;
  model.labels.assign(classes.begin(), classes.end());
  const std::size_t k = model.labels.size();
  model.weights.resize(k);
  model.bias.resize(k);

  // Every class shares one permutation seed so that the two-class problem
  // yields exactly negated models.
  auto train_class = [&](std::size_t c) {
    std::vector<int> y(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
      y[i] = std::find(labels[i].begin(), labels[i].end(), model.labels[c]) != labels[i].end() ? 1 : -1;
    BinarySvm b = train_binary(x, y, opt, seed);
    model.weights[c] = std::move(b.weights);
    model.bias[c] = b.bias;
  };
  const int workers = std::clamp(threads, 1, static_cast<int>(k));
  if (workers == 1) {
    for (std::size_t c = 0; c < k; ++c) train_class(c);
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex mu;
    for (int wi = 0; wi < workers; ++wi)
      pool.emplace_back([&, wi] {
        for (std::size_t c = static_cast<std::size_t>(wi); c < k; c += static_cast<std::size_t>(workers)) {
          try {
            train_class(c);
          } catch (...) {
            std::lock_guard lock(mu);
            if (!error) error = std::current_exception();
          }
        }
      });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }
  return model;
}

Json model_to_json(const SvmModel& m) {
  Json classes = Json::array();
  for (std::size_t c = 0; c < m.labels.size(); ++c)
    classes.push_back({{"label", m.labels[c]}, {"bias", m.bias[c]}, {"weights", m.weights[c]}});
  return {{"version", 1}, {"C", m.c}, {"classes", classes}};
}

SvmModel model_from_json(const Json& j) {
  try {
    if (j.at("version").get<int>() != 1) fail(ErrorCode::kInput, "unsupported model version");
    SvmModel m;
    m.c = j.at("C").get<double>();
    for (const auto& c : j.at("classes")) {
      m.labels.push_back(c.at("label").get<std::string>());
      m.bias.push_back(c.at("bias").get<double>());
      m.weights.push_back(c.at("weights").get<std::vector<double>>());
      if (m.weights.back().size() != m.weights.front().size())
        fail(ErrorCode::kInput, "model classes have different weight dimensions");
    }
    if (m.labels.empty()) fail(ErrorCode::kInput, "model has no classes");
    return m;
  } catch (const Json::exception& e) {
    fail(ErrorCode::kInput, std::string("malformed model JSON: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const SvmModel& model) {
  write_text_file(path, dump_json(model_to_json(model)));
}

SvmModel load_model(const std::filesystem::path& path) { return model_from_json(read_json_file(path)); }

MetricResult mean_accuracy(std::span<const std::string> predicted, std::span<const std::string> truth,
                           std::span<const std::string> classes) {
  if (predicted.size() != truth.size()) fail(ErrorCode::kInvalidArgument, "mean_accuracy: size mismatch");
  MetricResult r;
  double sum = 0;
  int used = 0;
  for (const auto& c : classes) {
    std::size_t total = 0, correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (truth[i] != c) continue;
      ++total;
      if (predicted[i] == c) ++correct;
    }
    if (total == 0) {
      r.warnings.push_back("class '" + c + "' has no test samples; excluded");
      continue;
    }
    const double acc = static_cast<double>(correct) / static_cast<double>(total);
    r.per_class[c] = acc;
    sum += acc;
    ++used;
  }
  r.value = used > 0 ? sum / used : std::numeric_limits<double>::quiet_NaN();
  return r;
}

double average_precision(std::span<const double> scores, std::span<const bool> positive) {
  if (scores.size() != positive.size()) fail(ErrorCode::kInvalidArgument, "average_precision: size mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double sum = 0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (!positive[order[rank]]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
  }
  return hits == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(hits);
}

MetricResult mean_average_precision(const std::vector<std::vector<double>>& scores,
                                    const std::vector<std::vector<std::string>>& labels,
                                    std::span<const std::string> classes) {
  if (scores.size() != labels.size()) fail(ErrorCode::kInvalidArgument, "mean_average_precision: size mismatch");
  MetricResult r;
  double sum = 0;
  int used = 0;
  std::vector<double> s(scores.size());
  std::unique_ptr<bool[]> pos(new bool[scores.size()]);
  for (std::size_t c = 0; c < classes.size(); ++c) {
    std::size_t positives = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i].size() != classes.size()) fail(ErrorCode::kInvalidArgument, "mean_average_precision: score width mismatch");
      s[i] = scores[i][c];
      pos[i] = std::find(labels[i].begin(), labels[i].end(), classes[c]) != labels[i].end();
      positives += pos[i] ? 1 : 0;
    }
    if (positives == 0) {
      r.warnings.push_back("class '" + classes[c] + "' has no positive test samples; excluded");
      continue;
    }
    const double ap = average_precision(s, std::span<const bool>(pos.get(), scores.size()));
    r.per_class[classes[c]] = ap;
    sum += ap;
    ++used;
  }
  r.value = used > 0 ? sum / used : std::numeric_limits<double>::quiet_NaN();
  return r;
}

std::vector<std::string> DatasetManifest::classes() const {
  std::set<std::string> s;
  for (const auto& e : entries) s.insert(e.labels.begin(), e.labels.end());
  return {s.begin(), s.end()};
}

namespace {

std::string scalar_string(const Json& v, const char* field, std::size_t line) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  std::ostringstream msg;
  msg << "manifest line " << line << ": field '" << field << "' must be a string";
  fail(ErrorCode::kManifestMismatch, msg.str());
}

}  // namespace

DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir) {
  DatasetManifest m;
  m.base_dir = base_dir;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      fail(ErrorCode::kManifestMismatch, "manifest line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("id"))
      fail(ErrorCode::kManifestMismatch, "manifest line " + std::to_string(lineno) + ": missing id");
    ManifestEntry e;
    e.id = scalar_string(j["id"], "id", lineno);
    if (j.contains("path")) e.path = scalar_string(j["path"], "path", lineno);
    if (j.contains("group") && !j["group"].is_null()) e.group = scalar_string(j["group"], "group", lineno);
    if (j.contains("split") && !j["split"].is_null()) e.split = scalar_string(j["split"], "split", lineno);
    if (j.contains("labels")) {
      const Json& l = j["labels"];
      if (l.is_array())
        for (const auto& v : l) e.labels.push_back(scalar_string(v, "labels", lineno));
      else
        e.labels.push_back(scalar_string(l, "labels", lineno));
    }
    if (e.labels.empty())
      fail(ErrorCode::kManifestMismatch, "manifest entry '" + e.id + "' has no labels");
    if (!ids.insert(e.id).second) fail(ErrorCode::kManifestMismatch, "duplicate manifest id '" + e.id + "'");
    m.entries.push_back(std::move(e));
  }
  if (m.entries.empty()) fail(ErrorCode::kManifestMismatch, "manifest is empty");
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kInput, "cannot open manifest " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), path.parent_path());
}

std::vector<Fold> leave_one_group_out(const DatasetManifest& manifest) {
  std::set<std::string> groups;
  for (const auto& e : manifest.entries) {
    if (e.group.empty()) fail(ErrorCode::kManifestMismatch, "manifest entry '" + e.id + "' has no group id");
    groups.insert(e.group);
  }
  if (groups.size() < 2)
    fail(ErrorCode::kManifestMismatch, "leave-one-group-out needs at least two groups");
  std::vector<Fold> folds;
  for (const auto& g : groups) {
    Fold f;
    f.group = g;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i)
      (manifest.entries[i].group == g ? f.test : f.train).push_back(i);
    folds.push_back(std::move(f));
  }
  return folds;
}

}  // namespace lstmf
