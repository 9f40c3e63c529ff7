#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace lstmf {

// Row-major 8-bit intensity image.
class GrayFrame {
 public:
  GrayFrame() = default;
  GrayFrame(int width, int height, std::uint8_t fill = 0);
  GrayFrame(int width, int height, std::vector<std::uint8_t> data);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }

  std::uint8_t at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  std::uint8_t& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }

  std::span<const std::uint8_t> pixels() const { return data_; }
  std::span<std::uint8_t> pixels() { return data_; }

  bool operator==(const GrayFrame&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

struct FrameSequence {
  std::vector<GrayFrame> frames;
  int width = 0;
  int height = 0;
  double fps = 0.0;  // metadata only

  std::size_t size() const { return frames.size(); }
};

// Checks the shared-geometry invariant; throws kInput on violation.
FrameSequence make_sequence(std::vector<GrayFrame> frames, double fps = 0.0);

// BT.601 luma, rounded half up in integer arithmetic.
inline std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return static_cast<std::uint8_t>((299u * r + 587u * g + 114u * b + 500u) / 1000u);
}

// Accepts a Y4M file or a directory of PGM/PNG images in lexicographic
// filename order.
FrameSequence load_frame_sequence(const std::filesystem::path& path);

GrayFrame read_pgm(const std::filesystem::path& path);
GrayFrame read_png(const std::filesystem::path& path);
FrameSequence read_y4m(const std::filesystem::path& path);

void write_pgm(const std::filesystem::path& path, const GrayFrame& frame);
// Writes a mono Y4M stream.
void write_y4m(const std::filesystem::path& path, const FrameSequence& seq);

struct Pyramid {
  std::vector<GrayFrame> levels;
  double scale_factor = 1.0;

  std::size_t size() const { return levels.size(); }
};

inline constexpr int kMinPyramidSide = 32;

// Dimension of pyramid level `level` for a base side length.
int pyramid_side(int base, double scale_factor, int level);

// Number of levels build_pyramid would produce for the given geometry.
int pyramid_level_count(int width, int height, double scale_factor, int max_levels);

// Bilinear resampling to an arbitrary size (pixel-center aligned).
GrayFrame resize_bilinear(const GrayFrame& src, int width, int height);

Pyramid build_pyramid(const GrayFrame& frame, double scale_factor, int max_levels);

}  // namespace lstmf
