#pragma once

#include <array>
#include <span>
#include <vector>

#include "lstmf/flow.hpp"
#include "lstmf/media.hpp"
#include "lstmf/track.hpp"

namespace lstmf {

enum class HistKind { kHog = 0, kHof = 1, kMbhX = 2, kMbhY = 3 };
inline constexpr std::array<HistKind, 4> kHistKinds = {HistKind::kHog, HistKind::kHof, HistKind::kMbhX,
                                                      HistKind::kMbhY};

// Volume geometry: 2x2 spatial cells, 3 temporal cells; 8 orientation bins
// over the full circle, HOF adds a zero-motion bin.
inline constexpr int kSpatialCells = 2;
inline constexpr int kCellsPerFrame = kSpatialCells * kSpatialCells;
inline constexpr int kTemporalCells = 3;
inline constexpr int kOrientationBins = 8;
inline constexpr int kTrajectorySteps = 15;

inline constexpr int kTrajDim = 2 * kTrajectorySteps;
inline constexpr int kHogDim = kCellsPerFrame * kTemporalCells * kOrientationBins;
inline constexpr int kHofDim = kCellsPerFrame * kTemporalCells * (kOrientationBins + 1);
inline constexpr int kMbhDim = kHogDim;
inline constexpr int kDescriptorValues = kTrajDim + kHogDim + kHofDim + 2 * kMbhDim;  // 426

constexpr int bins_for(HistKind k) { return k == HistKind::kHof ? kOrientationBins + 1 : kOrientationBins; }
constexpr int descriptor_dim(HistKind k) { return kCellsPerFrame * kTemporalCells * bins_for(k); }

// Descriptor types in record/encoding order.
inline constexpr int kDescriptorTypes = 5;
inline constexpr std::array<const char*, kDescriptorTypes> kDescriptorTypeNames = {"traj", "hog", "hof", "mbhx",
                                                                                  "mbhy"};
inline constexpr std::array<int, kDescriptorTypes> kDescriptorTypeDims = {kTrajDim, kHogDim, kHofDim, kMbhDim,
                                                                         kMbhDim};

struct DescriptorParams {
  int patch_size = 32;             // side of the volume cross-section, pixels
  double hof_zero_threshold = 0.4; // flow magnitude below this goes to the zero bin
};

// Bilinear split of a vector's magnitude over full-circle orientation bins.
// Writes into hist[0..bins).
void add_orientation(double dx, double dy, int bins, double* hist);

// Integral images of the per-pixel HOG/HOF/MBH contributions for one frame
// and the flow leaving it.
class FrameHistograms {
 public:
  FrameHistograms(const GrayFrame& frame, const FlowField& flow, const DescriptorParams& params);

  int width() const { return width_; }
  int height() const { return height_; }

  // Sums the kind's histogram over [x0, x1) x [y0, y1) into out[0..bins).
  void rect_sum(HistKind kind, int x0, int y0, int x1, int y1, double* out) const;

 private:
  int width_;
  int height_;
  std::array<std::vector<double>, 4> integral_;
};

// Top-left corner of the patch around p, shifted to lie inside the frame.
std::array<int, 2> patch_origin(double px, double py, int width, int height, int patch_size);

// Per-frame, per-spatial-cell histograms along one tracked path.
class CellHistogramCache {
 public:
  int frames() const { return frames_; }

  void append(const FrameHistograms& maps, double px, double py, int patch_size);

  // Histogram of spatial cell `cell` (row-major) at frame `f`.
  std::span<const double> cell(HistKind kind, int f, int cell) const;

 private:
  int frames_ = 0;
  std::array<std::vector<double>, 4> data_;  // [(f * cells + cell) * bins + bin]
};

// Builds the cache for the first block.length frames of a block; frames[i]
// and flows[i] must be the frame at block.start_frame + i and the flow
// leaving it, at the block's scale.
CellHistogramCache compute_cell_histograms(const TrajectoryBlock& block, std::span<const GrayFrame> frames,
                                           std::span<const FlowField> flows,
                                           const DescriptorParams& params = {});

// L1 normalization followed by an element-wise square root.
std::vector<double> root_normalize(std::span<const double> v);

// Temporal aggregation of the first l cached frames into 3 cells of l/3
// frames, then root normalization.
std::vector<double> aggregate_descriptor(const CellHistogramCache& cache, int length, HistKind kind);

// Displacements summed over groups of l/target_len steps, divided by the
// sum of group magnitudes.
std::vector<double> trajectory_shape(const TrajectoryBlock& block, int target_len = kTrajectorySteps);

struct DescriptorSet {
  int length = 0;
  int scale = 0;
  int start_frame = 0;
  double mean_x = 0.0;  // full-resolution coordinates
  double mean_y = 0.0;
  std::vector<double> traj, hog, hof, mbh_x, mbh_y;

  std::span<const double> part(int type) const;
};

DescriptorSet describe_block(const TrajectoryBlock& block, const CellHistogramCache& cache,
                             double level_to_full_scale);

}  // namespace lstmf
