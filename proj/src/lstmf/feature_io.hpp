#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lstmf/descript.hpp"
#include "lstmf/encode.hpp"

namespace lstmf {

// l, scale, start_frame, mean_x, mean_y, then the descriptor parts.
inline constexpr std::size_t kRecordMeta = 5;
inline constexpr std::size_t kRecordValues = kRecordMeta + kDescriptorValues;

struct FeatureHeader {
  std::uint64_t config_hash = 0;
  std::string video_id;
};

std::array<float, kRecordValues> pack_record(const DescriptorSet& d);
DescriptorSet unpack_record(const std::array<float, kRecordValues>& r);

class FeatureWriter {
 public:
  FeatureWriter(const std::filesystem::path& path, const FeatureHeader& header);

  void write(const DescriptorSet& d);
  void close();
  std::size_t records() const { return records_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t records_ = 0;
};

class FeatureReader {
 public:
  explicit FeatureReader(const std::filesystem::path& path);

  const FeatureHeader& header() const { return header_; }
  bool next(std::array<float, kRecordValues>& record);
  bool next(DescriptorSet& d);

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  FeatureHeader header_;
};

FeatureHeader read_feature_header(const std::filesystem::path& path);
std::vector<DescriptorSet> read_feature_records(const std::filesystem::path& path, FeatureHeader* header = nullptr);

// Representation files: magic "LSTMFRP1", feature config hash, video id,
// mode, empty flag, lengths, then float32 values.
void write_representation(const std::filesystem::path& path, const VideoRepresentation& rep,
                          std::uint64_t config_hash);
VideoRepresentation read_representation(const std::filesystem::path& path, std::uint64_t* config_hash = nullptr);

}  // namespace lstmf
