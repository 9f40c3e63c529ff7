#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lstmf/encode.hpp"

namespace lstmf {

struct SvmOptions {
  double c = 100.0;
  double epsilon = 1e-4;  // max projected-gradient violation
  int max_epochs = 1000;
};

struct BinarySvm {
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<double> dual_objective;  // after each epoch, minimization form
  int epochs = 0;
  bool converged = false;

  double decision(std::span<const double> x) const;
};

// L2-regularized hinge loss via dual coordinate descent; the bias is an
// extra feature of constant value 1. Labels are +1 / -1.
BinarySvm train_binary(const SampleMatrix& x, std::span<const int> y, const SvmOptions& options,
                       std::uint64_t seed);

struct SvmModel {
  double c = 100.0;
  std::vector<std::string> labels;
  std::vector<std::vector<double>> weights;
  std::vector<double> bias;

  std::size_t dim() const { return weights.empty() ? 0 : weights.front().size(); }
  std::vector<double> scores(std::span<const double> x) const;
  // Label with the highest score; ties go to the earlier class.
  const std::string& predict(std::span<const double> x) const;
};

// One binary problem per class; an entry is positive for every label it
// carries. Classes are sorted lexicographically.
SvmModel train_ova(const SampleMatrix& x, const std::vector<std::vector<std::string>>& labels,
                   const SvmOptions& options, std::uint64_t seed, int threads = 1);

Json model_to_json(const SvmModel& model);
SvmModel model_from_json(const Json& j);
void save_model(const std::filesystem::path& path, const SvmModel& model);
SvmModel load_model(const std::filesystem::path& path);

struct MetricResult {
  double value = 0.0;
  std::map<std::string, double> per_class;
  std::vector<std::string> warnings;
};

// Unweighted mean of per-class accuracy over `classes`; classes without
// test samples are skipped with a warning.
MetricResult mean_accuracy(std::span<const std::string> predicted, std::span<const std::string> truth,
                           std::span<const std::string> classes);

// Mean over positives of precision at their rank; ranking is by descending
// score with ties in input order. Returns NaN when there are no positives.
double average_precision(std::span<const double> scores, std::span<const bool> positive);

// scores[entry][class] aligned with `classes`.
MetricResult mean_average_precision(const std::vector<std::vector<double>>& scores,
                                    const std::vector<std::vector<std::string>>& labels,
                                    std::span<const std::string> classes);

struct ManifestEntry {
  std::string id;
  std::string path;
  std::vector<std::string> labels;
  std::string group;
  std::string split;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;  // relative paths resolve against this

  std::vector<std::string> classes() const;
};

// JSON-lines: one {id, path, labels, group, split} object per line.
DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir = {});
DatasetManifest load_manifest(const std::filesystem::path& path);

struct Fold {
  std::string group;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// One fold per distinct group (sorted), testing exactly that group.
std::vector<Fold> leave_one_group_out(const DatasetManifest& manifest);

}  // namespace lstmf
