#include "lstmf/track.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lstmf/error.hpp"

namespace lstmf {

void TrackerConfig::validate() const {
  if (lengths.empty()) fail(ErrorCode::kConfig, "tracker lengths must not be empty");
  if (lengths.front() <= 0) fail(ErrorCode::kConfig, "tracker lengths must be positive");
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (i > 0 && lengths[i] <= lengths[i - 1])
      fail(ErrorCode::kConfig, "tracker lengths must be strictly ascending");
    if (lengths[i] % lengths.front() != 0)
      fail(ErrorCode::kConfig, "length " + std::to_string(lengths[i]) + " is not a multiple of " +
                                   std::to_string(lengths.front()));
  }
  if (sample_stride <= 0) fail(ErrorCode::kConfig, "sample_stride must be positive");
  if (quality < 0 || quality >= 1) fail(ErrorCode::kConfig, "quality must lie in [0, 1)");
  if (static_threshold < 0) fail(ErrorCode::kConfig, "static_threshold must be non-negative");
  if (drift_fraction <= 0 || drift_fraction > 1) fail(ErrorCode::kConfig, "drift_fraction must lie in (0, 1]");
  if (max_step_fraction <= 0) fail(ErrorCode::kConfig, "max_step_fraction must be positive");
}

std::vector<double> min_eigenvalue_map(const GrayFrame& frame) {
  const int w = frame.width(), h = frame.height();
  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<double> dxx(n), dxy(n), dyy(n);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double gx = 0.5 * (double(frame.at(std::min(x + 1, w - 1), y)) - frame.at(std::max(x - 1, 0), y));
      const double gy = 0.5 * (double(frame.at(x, std::min(y + 1, h - 1))) - frame.at(x, std::max(y - 1, 0)));
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      dxx[i] = gx * gx;
      dxy[i] = gx * gy;
      dyy[i] = gy * gy;
    }
  std::vector<double> out(n);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double a = 0, b = 0, c = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const std::size_t i = static_cast<std::size_t>(std::clamp(y + dy, 0, h - 1)) * w +
                                static_cast<std::size_t>(std::clamp(x + dx, 0, w - 1));
          a += dxx[i];
          b += dxy[i];
          c += dyy[i];
        }
      const double half_diff = 0.5 * (a - c);
      out[static_cast<std::size_t>(y) * w + x] =
          std::max(0.0, 0.5 * (a + c) - std::sqrt(half_diff * half_diff + b * b));
    }
  return out;
}

std::vector<Vec2> dense_sample(const GrayFrame& frame, std::span<const Vec2> active,
                               const TrackerConfig& cfg) {
  const int w = frame.width(), h = frame.height(), W = cfg.sample_stride;
  const auto eig = min_eigenvalue_map(frame);
  const double max_eig = *std::max_element(eig.begin(), eig.end());
  std::vector<Vec2> out;
  if (max_eig <= 0) return out;
  const double threshold = cfg.quality * max_eig;

  // Occupancy grid: an active point can only block candidates within one
  // cell of its own.
  const int gw = (w + W - 1) / W, gh = (h + W - 1) / W;
  std::vector<std::vector<Vec2>> cells(static_cast<std::size_t>(gw) * gh);
  for (const Vec2& p : active) {
    const int cx = std::clamp(static_cast<int>(p.x / W), 0, gw - 1);
    const int cy = std::clamp(static_cast<int>(p.y / W), 0, gh - 1);
    cells[static_cast<std::size_t>(cy) * gw + cx].push_back(p);
  }
  const double w2 = double(W) * W;
  auto covered = [&](int gx, int gy) {
    const double px = double(gx) * W, py = double(gy) * W;
    for (int cy = std::max(gy - 1, 0); cy <= std::min(gy + 1, gh - 1); ++cy)
      for (int cx = std::max(gx - 1, 0); cx <= std::min(gx + 1, gw - 1); ++cx)
        for (const Vec2& p : cells[static_cast<std::size_t>(cy) * gw + cx]) {
          const double dx = p.x - px, dy = p.y - py;
          if (dx * dx + dy * dy < w2) return true;
        }
    return false;
  };

  for (int gy = 0; gy * W < h; ++gy)
    for (int gx = 0; gx * W < w; ++gx) {
      if (eig[static_cast<std::size_t>(gy * W) * w + gx * W] <= threshold) continue;
      if (covered(gx, gy)) continue;
      out.push_back({double(gx * W), double(gy * W)});
    }
  return out;
}

std::optional<Vec2> extend(Vec2 p, const FlowField& flow) {
  const Vec2 d = median_flow_at(flow, p);
  const Vec2 q{p.x + d.x, p.y + d.y};
  if (!(q.x >= 1.0 && q.y >= 1.0 && q.x <= flow.width() - 2.0 && q.y <= flow.height() - 2.0))
    return std::nullopt;
  return q;
}

std::vector<TrajectoryBlock> emit_blocks(TrackedPath& path, const TrackerConfig& cfg) {
  std::vector<TrajectoryBlock> out;
  while (path.emitted < cfg.lengths.size()) {
    const int l = cfg.lengths[path.emitted];
    if (path.points.size() < static_cast<std::size_t>(l) + 1) break;
    TrajectoryBlock b;
    b.points.assign(path.points.begin(), path.points.begin() + l + 1);
    b.length = l;
    b.scale = path.scale;
    b.start_frame = path.start_frame();
    b.frame_width = path.frame_width;
    b.frame_height = path.frame_height;
    b.path_id = path.id;
    out.push_back(std::move(b));
    ++path.emitted;
  }
  return out;
}

BlockVerdict validate_block(const TrajectoryBlock& block, const TrackerConfig& cfg) {
  const auto& pts = block.points;
  const double n = static_cast<double>(pts.size());
  double mx = 0, my = 0;
  for (const auto& p : pts) {
    mx += p.x;
    my += p.y;
  }
  mx /= n;
  my /= n;
  double vx = 0, vy = 0;
  for (const auto& p : pts) {
    vx += (p.x - mx) * (p.x - mx);
    vy += (p.y - my) * (p.y - my);
  }
  const double sx = std::sqrt(vx / n), sy = std::sqrt(vy / n);
  if (sx < cfg.static_threshold && sy < cfg.static_threshold) return BlockVerdict::kRejectStatic;

  double total = 0, max_step = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double step = std::hypot(pts[i].x - pts[i - 1].x, pts[i].y - pts[i - 1].y);
    total += step;
    max_step = std::max(max_step, step);
  }
  const double frame_limit =
      cfg.max_step_fraction * std::min(block.frame_width, block.frame_height);
  if (max_step > cfg.drift_fraction * total) return BlockVerdict::kRejectDrift;
  if (block.frame_width > 0 && block.frame_height > 0 && max_step > frame_limit)
    return BlockVerdict::kRejectDrift;
  return BlockVerdict::kAccept;
}

Tracker::Tracker(TrackerConfig cfg, int scale) : cfg_(std::move(cfg)), scale_(scale) {
  cfg_.validate();
}

void Tracker::start(const GrayFrame& frame) {
  active_.clear();
  t_ = 0;
  resample(frame);
}

std::vector<TrajectoryBlock> Tracker::advance(const GrayFrame& frame, const FlowField& flow,
                                              const StepObserver& observer) {
  if (t_ < 0) fail(ErrorCode::kInvalidArgument, "Tracker::advance called before start");
  if (flow.width() != frame.width() || flow.height() != frame.height())
    fail(ErrorCode::kInvalidArgument, "Tracker::advance: flow and frame dimensions differ");
  ++t_;
  std::vector<TrajectoryBlock> blocks;
  std::vector<TrackedPath> survivors;
  survivors.reserve(active_.size());
  const std::size_t full = static_cast<std::size_t>(cfg_.max_length()) + 1;
  for (auto& path : active_) {
    if (observer) observer(path);
    const TrackPoint& last = path.points.back();
    ++flow_lookups_;
    const auto next = extend({last.x, last.y}, flow);
    if (!next) continue;
    path.points.push_back({next->x, next->y, t_});
    auto emitted = emit_blocks(path, cfg_);
    for (auto& b : emitted) blocks.push_back(std::move(b));
    if (path.points.size() < full) survivors.push_back(std::move(path));
  }
  active_ = std::move(survivors);
  resample(frame);
  return blocks;
}

void Tracker::resample(const GrayFrame& frame) {
  std::vector<Vec2> positions;
  positions.reserve(active_.size());
  for (const auto& p : active_) positions.push_back({p.points.back().x, p.points.back().y});
  for (const Vec2& p : dense_sample(frame, positions, cfg_)) {
    TrackedPath path;
    path.id = next_id_++;
    path.scale = scale_;
    path.frame_width = frame.width();
    path.frame_height = frame.height();
    path.points.push_back({p.x, p.y, t_});
    active_.push_back(std::move(path));
  }
}

std::vector<TrajectoryBlock> track_sequence(std::span<const GrayFrame> frames,
                                            std::span<const FlowField> flows,
                                            const TrackerConfig& cfg, int scale) {
  if (frames.empty()) return {};
  if (flows.size() + 1 < frames.size())
    fail(ErrorCode::kInvalidArgument, "track_sequence: need one flow per consecutive frame pair");
  Tracker tracker(cfg, scale);
  tracker.start(frames[0]);
  std::vector<TrajectoryBlock> out;
  for (std::size_t t = 1; t < frames.size(); ++t) {
    auto blocks = tracker.advance(frames[t], flows[t - 1]);
    for (auto& b : blocks) out.push_back(std::move(b));
  }
  return out;
}

}  // namespace lstmf
