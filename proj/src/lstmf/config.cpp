#include "lstmf/config.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "lstmf/error.hpp"

namespace lstmf {

namespace {

// Reads keys out of one JSON object and rejects anything left over.
class Section {
 public:
  Section(const Json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) fail(ErrorCode::kConfig, "config section '" + name_ + "' must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const Json::exception&) {
      fail(ErrorCode::kConfig, "config key '" + name_ + "." + key + "' has the wrong type");
    }
  }

  const Json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(ErrorCode::kConfig, "unknown config key '" + name_ + "." + it.key() + "'");
  }

 private:
  const Json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

const char* averaging_name(AccuracyAveraging a) {
  return a == AccuracyAveraging::kPooled ? "pooled" : "folds_then_classes";
}

Json extraction_json(const PipelineConfig& c) {
  return {
      {"tracker",
       {{"lengths", c.tracker.lengths},
        {"sample_stride", c.tracker.sample_stride},
        {"quality", c.tracker.quality},
        {"static_threshold", c.tracker.static_threshold},
        {"drift_fraction", c.tracker.drift_fraction},
        {"max_step_fraction", c.tracker.max_step_fraction}}},
      {"pyramid", {{"scale_factor", c.pyramid.scale_factor}, {"max_levels", c.pyramid.max_levels}}},
      {"flow",
       {{"window", c.flow.window},
        {"levels", c.flow.levels},
        {"iterations", c.flow.iterations},
        {"poly_n", c.flow.poly_n},
        {"poly_sigma", c.flow.poly_sigma},
        {"pyr_scale", c.flow.pyr_scale}}},
      {"stabilize", {{"enabled", c.stabilize}, {"tracking", c.stabilize_tracking}}},
      {"ransac",
       {{"inlier_threshold", c.ransac.inlier_threshold},
        {"iterations", c.ransac.iterations},
        {"grid_stride", c.ransac.grid_stride},
        {"min_inlier_ratio", c.ransac.min_inlier_ratio},
        {"gradient_fraction", c.ransac.gradient_fraction}}},
      {"descriptor",
       {{"patch_size", c.descriptor.patch_size}, {"hof_zero_threshold", c.descriptor.hof_zero_threshold}}},
      {"seed", c.seed},  // drives the RANSAC streams
  };
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_to_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<int> parse_lengths(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      fail(ErrorCode::kConfig, "bad length list '" + text + "'");
    }
    if (used != item.size()) fail(ErrorCode::kConfig, "bad length list '" + text + "'");
    out.push_back(v);
  }
  if (out.empty()) fail(ErrorCode::kConfig, "empty length list");
  return out;
}

void PipelineConfig::validate() const {
  tracker.validate();
  for (int l : tracker.lengths)
    if (l % kTrajectorySteps != 0)
      fail(ErrorCode::kConfig, "length " + std::to_string(l) + " is not a multiple of " +
                                   std::to_string(kTrajectorySteps));
  if (!(pyramid.scale_factor > 1.0)) fail(ErrorCode::kConfig, "pyramid.scale_factor must exceed 1");
  if (pyramid.max_levels < 1) fail(ErrorCode::kConfig, "pyramid.max_levels must be at least 1");
  if (flow.window < 1 || flow.levels < 1 || flow.iterations < 1 || flow.poly_n < 1)
    fail(ErrorCode::kConfig, "flow window, levels, iterations and poly_n must be positive");
  if (!(flow.poly_sigma > 0)) fail(ErrorCode::kConfig, "flow.poly_sigma must be positive");
  if (!(flow.pyr_scale > 0 && flow.pyr_scale < 1)) fail(ErrorCode::kConfig, "flow.pyr_scale must lie in (0, 1)");
  if (!(ransac.inlier_threshold > 0) || ransac.iterations < 1 || ransac.grid_stride < 1)
    fail(ErrorCode::kConfig, "ransac threshold, iterations and grid_stride must be positive");
  if (ransac.min_inlier_ratio < 0 || ransac.min_inlier_ratio > 1 || ransac.gradient_fraction < 0 ||
      ransac.gradient_fraction > 1)
    fail(ErrorCode::kConfig, "ransac ratios must lie in [0, 1]");
  if (descriptor.patch_size < 2 || descriptor.patch_size % kSpatialCells != 0)
    fail(ErrorCode::kConfig, "descriptor.patch_size must be a positive even number");
  if (descriptor.hof_zero_threshold < 0) fail(ErrorCode::kConfig, "descriptor.hof_zero_threshold must be non-negative");
  if (encoder.gaussians < 1) fail(ErrorCode::kConfig, "encoder.gaussians must be positive");
  if (encoder.sample_budget < 1) fail(ErrorCode::kConfig, "encoder.sample_budget must be positive");
  if (encoder.max_em_iterations < 1) fail(ErrorCode::kConfig, "encoder.max_em_iterations must be positive");
  if (encoder.em_tolerance < 0) fail(ErrorCode::kConfig, "encoder.em_tolerance must be non-negative");
  if (encoder.lengths.empty()) fail(ErrorCode::kConfig, "encoder.lengths must not be empty");
  for (std::size_t i = 0; i < encoder.lengths.size(); ++i) {
    if (i > 0 && encoder.lengths[i] <= encoder.lengths[i - 1])
      fail(ErrorCode::kConfig, "encoder.lengths must be strictly ascending");
    if (encoder.lengths[i] <= 0 || encoder.lengths[i] % kTrajectorySteps != 0)
      fail(ErrorCode::kConfig, "encoder length " + std::to_string(encoder.lengths[i]) + " is not a positive multiple of " +
                                   std::to_string(kTrajectorySteps));
  }
  if (!(svm.c > 0) || !(svm.epsilon > 0) || svm.max_epochs < 1)
    fail(ErrorCode::kConfig, "svm c, epsilon and max_epochs must be positive");
  if (jobs < 1) fail(ErrorCode::kConfig, "jobs must be at least 1");
}

Json PipelineConfig::to_json() const {
  Json j = extraction_json(*this);
  j["encoder"] = {{"gaussians", encoder.gaussians},
                  {"sample_budget", encoder.sample_budget},
                  {"mode", pool_mode_name(encoder.mode)},
                  {"lengths", encoder.lengths},
                  {"max_em_iterations", encoder.max_em_iterations},
                  {"em_tolerance", encoder.em_tolerance}};
  j["svm"] = {{"c", svm.c}, {"epsilon", svm.epsilon}, {"max_epochs", svm.max_epochs}};
  j["evaluation"] = {{"accuracy_averaging", averaging_name(accuracy_averaging)}};
  j["seed"] = seed;
  j["jobs"] = jobs;
  return j;
}

PipelineConfig PipelineConfig::from_json(const Json& j) {
  PipelineConfig c;
  Section root(j, "config");
  if (const Json* s = root.child("tracker")) {
    Section t(*s, "tracker");
    t.get("lengths", c.tracker.lengths);
    t.get("sample_stride", c.tracker.sample_stride);
    t.get("quality", c.tracker.quality);
    t.get("static_threshold", c.tracker.static_threshold);
    t.get("drift_fraction", c.tracker.drift_fraction);
    t.get("max_step_fraction", c.tracker.max_step_fraction);
    t.finish();
  }
  if (const Json* s = root.child("pyramid")) {
    Section t(*s, "pyramid");
    t.get("scale_factor", c.pyramid.scale_factor);
    t.get("max_levels", c.pyramid.max_levels);
    t.finish();
  }
  if (const Json* s = root.child("flow")) {
    Section t(*s, "flow");
    t.get("window", c.flow.window);
    t.get("levels", c.flow.levels);
    t.get("iterations", c.flow.iterations);
    t.get("poly_n", c.flow.poly_n);
    t.get("poly_sigma", c.flow.poly_sigma);
    t.get("pyr_scale", c.flow.pyr_scale);
    t.finish();
  }
  if (const Json* s = root.child("stabilize")) {
    Section t(*s, "stabilize");
    t.get("enabled", c.stabilize);
    t.get("tracking", c.stabilize_tracking);
    t.finish();
  }
  if (const Json* s = root.child("ransac")) {
    Section t(*s, "ransac");
    t.get("inlier_threshold", c.ransac.inlier_threshold);
    t.get("iterations", c.ransac.iterations);
    t.get("grid_stride", c.ransac.grid_stride);
    t.get("min_inlier_ratio", c.ransac.min_inlier_ratio);
    t.get("gradient_fraction", c.ransac.gradient_fraction);
    t.finish();
  }
  if (const Json* s = root.child("descriptor")) {
    Section t(*s, "descriptor");
    t.get("patch_size", c.descriptor.patch_size);
    t.get("hof_zero_threshold", c.descriptor.hof_zero_threshold);
    t.finish();
  }
  if (const Json* s = root.child("encoder")) {
    Section t(*s, "encoder");
    t.get("gaussians", c.encoder.gaussians);
    t.get("sample_budget", c.encoder.sample_budget);
    std::string mode = pool_mode_name(c.encoder.mode);
    t.get("mode", mode);
    try {
      c.encoder.mode = parse_pool_mode(mode);
    } catch (const Error& e) {
      fail(ErrorCode::kConfig, e.what());
    }
    t.get("lengths", c.encoder.lengths);
    t.get("max_em_iterations", c.encoder.max_em_iterations);
    t.get("em_tolerance", c.encoder.em_tolerance);
    t.finish();
  }
  if (const Json* s = root.child("svm")) {
    Section t(*s, "svm");
    t.get("c", c.svm.c);
    t.get("epsilon", c.svm.epsilon);
    t.get("max_epochs", c.svm.max_epochs);
    t.finish();
  }
  if (const Json* s = root.child("evaluation")) {
    Section t(*s, "evaluation");
    std::string avg = averaging_name(c.accuracy_averaging);
    t.get("accuracy_averaging", avg);
    if (avg == "pooled")
      c.accuracy_averaging = AccuracyAveraging::kPooled;
    else if (avg == "folds_then_classes")
      c.accuracy_averaging = AccuracyAveraging::kFoldsThenClasses;
    else
      fail(ErrorCode::kConfig, "unknown accuracy_averaging '" + avg + "'");
    t.finish();
  }
  root.get("seed", c.seed);
  root.get("jobs", c.jobs);
  root.finish();
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  Json j;
  try {
    j = read_json_file(path);
  } catch (const Error& e) {
    fail(ErrorCode::kConfig, e.what());
  }
  return from_json(j);
}

std::uint64_t PipelineConfig::extraction_hash() const { return fnv1a64(dump_json(extraction_json(*this), -1)); }

std::uint64_t PipelineConfig::hash() const {
  Json j = to_json();
  j.erase("jobs");  // results do not depend on it
  return fnv1a64(dump_json(j, -1));
}

}  // namespace lstmf
