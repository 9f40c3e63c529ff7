#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lstmf/config.hpp"
#include "lstmf/encode.hpp"
#include "lstmf/feature_io.hpp"
#include "lstmf/learn.hpp"
#include "lstmf/media.hpp"

namespace lstmf {

struct ExtractionSummary {
  std::string video_id;
  std::size_t frames = 0;
  int scales = 0;
  std::map<int, std::size_t> blocks;  // accepted blocks per length
  std::size_t rejected_static = 0;
  std::size_t rejected_drift = 0;
  std::size_t stabilization_fallbacks = 0;
  std::vector<std::string> warnings;

  std::size_t records() const;
  std::string summary_line() const;
};

using DescriptorSink = std::function<void(const DescriptorSet&)>;

// Runs flow, tracking and description over every pyramid level in one pass;
// accepted descriptor sets reach `sink` in emission order.
ExtractionSummary extract_descriptors(const FrameSequence& seq, const PipelineConfig& cfg,
                                      const DescriptorSink& sink);

// Video ids default to the input's file stem.
std::string default_video_id(const std::filesystem::path& input);

ExtractionSummary extract_file(const std::filesystem::path& input, const std::filesystem::path& output,
                               const PipelineConfig& cfg, const std::string& video_id = {});

struct EncoderFitSummary {
  std::size_t available = 0;  // descriptors at the encoder lengths
  std::size_t sampled = 0;
  std::vector<int> dropped_lengths;  // configured but absent from every file
  std::array<GmmFit, kDescriptorTypes> fits;
};

FisherEncoder fit_encoder(std::span<const std::filesystem::path> feature_files, const PipelineConfig& cfg,
                          EncoderFitSummary* summary = nullptr);

VideoRepresentation encode_features(const std::filesystem::path& feature_file, const FisherEncoder& encoder,
                                    PoolMode mode, std::span<const int> lengths);

// Writes <output_dir>/<video id>.lrep for every file; returns the paths.
std::vector<std::filesystem::path> encode_files(std::span<const std::filesystem::path> feature_files,
                                                const FisherEncoder& encoder, PoolMode mode,
                                                std::span<const int> lengths,
                                                const std::filesystem::path& output_dir, int jobs);

// Representation of a manifest entry: <rep_dir>/<id>.lrep, or the entry's
// own path when rep_dir is empty.
std::filesystem::path representation_path(const DatasetManifest& manifest, const ManifestEntry& entry,
                                          const std::filesystem::path& rep_dir);

struct LoadedRepresentations {
  SampleMatrix x;  // one row per manifest entry
  std::uint64_t config_hash = 0;
  std::vector<std::string> warnings;
};

LoadedRepresentations load_representations(const DatasetManifest& manifest, const std::filesystem::path& rep_dir);

// Trains on the entries marked "train", or on every entry when no entry
// carries a split.
SvmModel train_from_manifest(const DatasetManifest& manifest, const std::filesystem::path& rep_dir,
                             const PipelineConfig& cfg);

enum class Protocol { kSplit, kLogo };
enum class Metric { kMacc, kMap };

Protocol parse_protocol(const std::string& name);
Metric parse_metric(const std::string& name);

// Report JSON: {metric, protocol, value, per_class, per_fold, config_hash,
// feature_config_hash, warnings}.
Json evaluate_manifest(const DatasetManifest& manifest, const std::filesystem::path& rep_dir,
                       const PipelineConfig& cfg, Protocol protocol, Metric metric);

// Runs fn(0..n) on up to `jobs` threads; rethrows the error of the lowest
// failing index.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace lstmf
