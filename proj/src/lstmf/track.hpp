#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "lstmf/flow.hpp"
#include "lstmf/media.hpp"

namespace lstmf {

struct TrackerConfig {
  std::vector<int> lengths{15, 30, 45, 60, 75, 90};
  int sample_stride = 5;
  double quality = 0.001;
  double static_threshold = 1.7320508075688772;  // sqrt(3)
  double drift_fraction = 0.7;
  double max_step_fraction = 0.7;  // of min(frame width, height)

  int min_length() const { return lengths.front(); }
  int max_length() const { return lengths.back(); }

  // Throws kConfig unless lengths are ascending positive multiples of the
  // smallest one and the scalar settings are in range.
  void validate() const;
};

struct TrackPoint {
  double x = 0.0;
  double y = 0.0;
  int t = 0;
};

struct TrajectoryBlock {
  std::vector<TrackPoint> points;  // length + 1 entries
  int length = 0;
  int scale = 0;
  int start_frame = 0;
  int frame_width = 0;   // geometry of the pyramid level
  int frame_height = 0;
  std::uint64_t path_id = 0;
};

enum class BlockVerdict { kAccept, kRejectStatic, kRejectDrift };

// Smaller eigenvalue of the 3x3-summed structure tensor at every pixel.
std::vector<double> min_eigenvalue_map(const GrayFrame& frame);

// Grid points (iW, jW) that are at least W pixels from every active point
// and pass the relative eigenvalue quality gate.
std::vector<Vec2> dense_sample(const GrayFrame& frame, std::span<const Vec2> active,
                               const TrackerConfig& cfg);

// Advances a point by the median flow. Empty when the new position leaves
// [1, w-2] x [1, h-2].
std::optional<Vec2> extend(Vec2 p, const FlowField& flow);

struct TrackedPath {
  std::uint64_t id = 0;
  int scale = 0;
  int frame_width = 0;
  int frame_height = 0;
  std::vector<TrackPoint> points;
  std::size_t emitted = 0;  // number of lengths already emitted

  int start_frame() const { return points.front().t; }
};

// Emits a block for every configured length the path has newly reached.
// Each block covers the first l+1 points; a length is emitted at most once.
std::vector<TrajectoryBlock> emit_blocks(TrackedPath& path, const TrackerConfig& cfg);

BlockVerdict validate_block(const TrajectoryBlock& block, const TrackerConfig& cfg);

// Single-pass multi-length tracker for one pyramid level.
class Tracker {
 public:
  // Called for every active path right before it is extended; the path's
  // last point lies on the previous frame.
  using StepObserver = std::function<void(const TrackedPath&)>;

  Tracker(TrackerConfig cfg, int scale);

  void start(const GrayFrame& frame);

  // Moves every active path from frame t-1 to t with the flow (t-1 -> t)
  // and samples new points on `frame`. Returns the newly emitted blocks.
  std::vector<TrajectoryBlock> advance(const GrayFrame& frame, const FlowField& flow,
                                       const StepObserver& observer = {});

  const std::vector<TrackedPath>& active() const { return active_; }
  std::uint64_t flow_lookups() const { return flow_lookups_; }
  int frame_index() const { return t_; }

 private:
  void resample(const GrayFrame& frame);

  TrackerConfig cfg_;
  int scale_;
  int t_ = -1;
  std::uint64_t next_id_ = 0;
  std::uint64_t flow_lookups_ = 0;
  std::vector<TrackedPath> active_;
};

// Tracks a whole sequence given precomputed flows (flows[i] maps frame i to
// i+1). Returns every emitted block, unvalidated.
std::vector<TrajectoryBlock> track_sequence(std::span<const GrayFrame> frames,
                                            std::span<const FlowField> flows,
                                            const TrackerConfig& cfg, int scale = 0);

}  // namespace lstmf
