#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lstmf/descript.hpp"
#include "lstmf/encode.hpp"
#include "lstmf/flow.hpp"
#include "lstmf/json_io.hpp"
#include "lstmf/learn.hpp"
#include "lstmf/track.hpp"

namespace lstmf {

struct PyramidParams {
  double scale_factor = 1.4142135623730951;  // sqrt(2)
  int max_levels = 8;
};

struct EncoderParams {
  int gaussians = 256;
  std::size_t sample_budget = 256000;
  PoolMode mode = PoolMode::kJoint;
  std::vector<int> lengths{15, 30, 45, 60, 75, 90};
  int max_em_iterations = 200;
  double em_tolerance = 1e-6;
};

enum class AccuracyAveraging { kFoldsThenClasses, kPooled };

struct PipelineConfig {
  TrackerConfig tracker;
  PyramidParams pyramid;
  FlowParams flow;
  RansacParams ransac;
  bool stabilize = true;
  bool stabilize_tracking = true;  // track on the stabilized flow as well
  DescriptorParams descriptor;
  EncoderParams encoder;
  SvmOptions svm;
  AccuracyAveraging accuracy_averaging = AccuracyAveraging::kFoldsThenClasses;
  std::uint64_t seed = 0;
  int jobs = 1;

  // Throws kConfig on any out-of-range or inconsistent setting.
  void validate() const;

  Json to_json() const;
  // Missing keys keep their defaults; unknown keys are rejected.
  static PipelineConfig from_json(const Json& j);
  static PipelineConfig load(const std::filesystem::path& path);

  // FNV-1a over the canonical JSON of the settings that shape extracted
  // features (tracker, pyramid, flow, stabilization, descriptor, seed).
  std::uint64_t extraction_hash() const;
  // Same over the whole configuration except the thread count.
  std::uint64_t hash() const;
};

std::uint64_t fnv1a64(const std::string& bytes);
std::string hash_to_hex(std::uint64_t h);

// Parses "15,30,45".
std::vector<int> parse_lengths(const std::string& text);

}  // namespace lstmf
