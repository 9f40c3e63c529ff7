#include "lstmf/descript.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "lstmf/error.hpp"

namespace lstmf {

void add_orientation(double dx, double dy, int bins, double* hist) {
  const double mag = std::hypot(dx, dy);
  if (mag == 0.0) return;
  double angle = std::atan2(dy, dx);
  if (angle < 0) angle += 2 * std::numbers::pi;
  double pos = angle * bins / (2 * std::numbers::pi);
  if (pos >= bins) pos = 0;
  const int b0 = static_cast<int>(pos);
  const double frac = pos - b0;
  hist[b0] += mag * (1.0 - frac);
  hist[(b0 + 1) % bins] += mag * frac;
}

namespace {

// Central difference with replicated border.
template <class Sample>
void gradient_at(const Sample& f, int x, int y, int w, int h, double& gx, double& gy) {
  gx = f(std::min(x + 1, w - 1), y) - f(std::max(x - 1, 0), y);
  gy = f(x, std::min(y + 1, h - 1)) - f(x, std::max(y - 1, 0));
}

}  // namespace

FrameHistograms::FrameHistograms(const GrayFrame& frame, const FlowField& flow, const DescriptorParams& params)
    : width_(frame.width()), height_(frame.height()) {
  if (flow.width() != width_ || flow.height() != height_)
    fail(ErrorCode::kInvalidArgument, "FrameHistograms: frame and flow dimensions differ");
  const int w = width_, h = height_;
  const std::size_t stride_row = static_cast<std::size_t>(w + 1);
  for (HistKind k : kHistKinds)
    integral_[static_cast<int>(k)].assign(stride_row * (h + 1) * bins_for(k), 0.0);

  auto img = [&](int x, int y) { return double(frame.at(x, y)); };
  auto fu = [&](int x, int y) { return flow.u(x, y); };
  auto fv = [&](int x, int y) { return flow.v(x, y); };

  std::array<double, kOrientationBins + 1> px{};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (HistKind k : kHistKinds) {
        const int bins = bins_for(k);
        std::fill(px.begin(), px.end(), 0.0);
        double dx = 0, dy = 0;
        switch (k) {
          case HistKind::kHog:
            gradient_at(img, x, y, w, h, dx, dy);
            add_orientation(dx, dy, bins, px.data());
            break;
          case HistKind::kHof:
            dx = flow.u(x, y);
            dy = flow.v(x, y);
            if (std::hypot(dx, dy) < params.hof_zero_threshold)
              px[kOrientationBins] = 1.0;
            else
              add_orientation(dx, dy, kOrientationBins, px.data());
            break;
          case HistKind::kMbhX:
            gradient_at(fu, x, y, w, h, dx, dy);
            add_orientation(dx, dy, bins, px.data());
            break;
          case HistKind::kMbhY:
            gradient_at(fv, x, y, w, h, dx, dy);
            add_orientation(dx, dy, bins, px.data());
            break;
        }
        auto& ii = integral_[static_cast<int>(k)];
        double* cur = ii.data() + ((y + 1) * stride_row + (x + 1)) * bins;
        const double* up = ii.data() + (y * stride_row + (x + 1)) * bins;
        const double* left = ii.data() + ((y + 1) * stride_row + x) * bins;
        const double* diag = ii.data() + (y * stride_row + x) * bins;
        for (int b = 0; b < bins; ++b) cur[b] = px[b] + up[b] + left[b] - diag[b];
      }
    }
  }
}

void FrameHistograms::rect_sum(HistKind kind, int x0, int y0, int x1, int y1, double* out) const {
  const int bins = bins_for(kind);
  const std::size_t stride_row = static_cast<std::size_t>(width_ + 1);
  const auto& ii = integral_[static_cast<int>(kind)];
  const double* a = ii.data() + (y0 * stride_row + x0) * bins;
  const double* b = ii.data() + (y0 * stride_row + x1) * bins;
  const double* c = ii.data() + (y1 * stride_row + x0) * bins;
  const double* d = ii.data() + (y1 * stride_row + x1) * bins;
  for (int i = 0; i < bins; ++i) out[i] = d[i] - b[i] - c[i] + a[i];
}

std::array<int, 2> patch_origin(double px, double py, int width, int height, int patch_size) {
  const int half = patch_size / 2;
  const int x0 = std::clamp(static_cast<int>(std::lround(px)) - half, 0, std::max(width - patch_size, 0));
  const int y0 = std::clamp(static_cast<int>(std::lround(py)) - half, 0, std::max(height - patch_size, 0));
  return {x0, y0};
}

void CellHistogramCache::append(const FrameHistograms& maps, double px, double py, int patch_size) {
  const auto [x0, y0] = patch_origin(px, py, maps.width(), maps.height(), patch_size);
  const int cell = patch_size / kSpatialCells;
  for (HistKind k : kHistKinds) {
    const int bins = bins_for(k);
    auto& d = data_[static_cast<int>(k)];
    const std::size_t base = d.size();
    d.resize(base + static_cast<std::size_t>(kCellsPerFrame) * bins);
    for (int cy = 0; cy < kSpatialCells; ++cy)
      for (int cx = 0; cx < kSpatialCells; ++cx) {
        const int xa = std::min(x0 + cx * cell, maps.width());
        const int ya = std::min(y0 + cy * cell, maps.height());
        const int xb = std::min(xa + cell, maps.width());
        const int yb = std::min(ya + cell, maps.height());
        maps.rect_sum(k, xa, ya, xb, yb, d.data() + base + static_cast<std::size_t>(cy * kSpatialCells + cx) * bins);
      }
  }
  ++frames_;
}

std::span<const double> CellHistogramCache::cell(HistKind kind, int f, int cell) const {
  const int bins = bins_for(kind);
  const auto& d = data_[static_cast<int>(kind)];
  return std::span<const double>(d).subspan(static_cast<std::size_t>(f * kCellsPerFrame + cell) * bins,
                                            static_cast<std::size_t>(bins));
}

CellHistogramCache compute_cell_histograms(const TrajectoryBlock& block, std::span<const GrayFrame> frames,
                                           std::span<const FlowField> flows, const DescriptorParams& params) {
  if (frames.size() < static_cast<std::size_t>(block.length) || flows.size() < static_cast<std::size_t>(block.length))
    fail(ErrorCode::kInvalidArgument, "compute_cell_histograms: frames/flows do not cover the block");
  CellHistogramCache cache;
  for (int i = 0; i < block.length; ++i) {
    const FrameHistograms maps(frames[static_cast<std::size_t>(i)], flows[static_cast<std::size_t>(i)], params);
    cache.append(maps, block.points[static_cast<std::size_t>(i)].x, block.points[static_cast<std::size_t>(i)].y,
                 params.patch_size);
  }
  return cache;
}

std::vector<double> root_normalize(std::span<const double> v) {
  double l1 = 0;
  for (double x : v) l1 += std::abs(x);
  std::vector<double> out(v.size(), 0.0);
  if (l1 <= 0) return out;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::sqrt(std::abs(v[i]) / l1);
  return out;
}

std::vector<double> aggregate_descriptor(const CellHistogramCache& cache, int length, HistKind kind) {
  if (length <= 0 || length % kTemporalCells != 0)
    fail(ErrorCode::kInvalidArgument, "aggregate_descriptor: length " + std::to_string(length) +
                                          " is not divisible by " + std::to_string(kTemporalCells));
  if (cache.frames() < length)
    fail(ErrorCode::kInvalidArgument, "aggregate_descriptor: cache holds " + std::to_string(cache.frames()) +
                                          " frames, need " + std::to_string(length));
  const int bins = bins_for(kind);
  const int per_cell = length / kTemporalCells;
  std::vector<double> sum(static_cast<std::size_t>(descriptor_dim(kind)), 0.0);
  for (int tc = 0; tc < kTemporalCells; ++tc)
    for (int c = 0; c < kCellsPerFrame; ++c) {
      double* dst = sum.data() + static_cast<std::size_t>(tc * kCellsPerFrame + c) * bins;
      for (int f = tc * per_cell; f < (tc + 1) * per_cell; ++f) {
        const auto h = cache.cell(kind, f, c);
        for (int b = 0; b < bins; ++b) dst[b] += h[static_cast<std::size_t>(b)];
      }
    }
  return root_normalize(sum);
}

std::vector<double> trajectory_shape(const TrajectoryBlock& block, int target_len) {
  const int l = block.length;
  if (target_len <= 0 || l % target_len != 0)
    fail(ErrorCode::kInvalidArgument, "trajectory_shape: length " + std::to_string(l) +
                                          " is not a multiple of " + std::to_string(target_len));
  if (block.points.size() != static_cast<std::size_t>(l) + 1)
    fail(ErrorCode::kInvalidArgument, "trajectory_shape: malformed block");
  const int stride = l / target_len;
  std::vector<double> out(static_cast<std::size_t>(2 * target_len), 0.0);
  double norm = 0;
  for (int g = 0; g < target_len; ++g) {
    const auto& a = block.points[static_cast<std::size_t>(g * stride)];
    const auto& b = block.points[static_cast<std::size_t>((g + 1) * stride)];
    // Telescoped sum of the group's per-frame displacements.
    const double dx = b.x - a.x, dy = b.y - a.y;
    out[static_cast<std::size_t>(2 * g)] = dx;
    out[static_cast<std::size_t>(2 * g + 1)] = dy;
    norm += std::hypot(dx, dy);
  }
  if (!(norm > 1e-6)) fail(ErrorCode::kInvalidArgument, "trajectory_shape: zero total displacement");
  for (double& v : out) v /= norm;
  return out;
}

std::span<const double> DescriptorSet::part(int type) const {
  switch (type) {
    case 0: return traj;
    case 1: return hog;
    case 2: return hof;
    case 3: return mbh_x;
    case 4: return mbh_y;
  }
  fail(ErrorCode::kInvalidArgument, "unknown descriptor type " + std::to_string(type));
}

DescriptorSet describe_block(const TrajectoryBlock& block, const CellHistogramCache& cache,
                             double level_to_full_scale) {
  DescriptorSet d;
  d.length = block.length;
  d.scale = block.scale;
  d.start_frame = block.start_frame;
  double mx = 0, my = 0;
  for (const auto& p : block.points) {
    mx += p.x;
    my += p.y;
  }
  d.mean_x = mx / block.points.size() * level_to_full_scale;
  d.mean_y = my / block.points.size() * level_to_full_scale;
  d.traj = trajectory_shape(block);
  d.hog = aggregate_descriptor(cache, block.length, HistKind::kHog);
  d.hof = aggregate_descriptor(cache, block.length, HistKind::kHof);
  d.mbh_x = aggregate_descriptor(cache, block.length, HistKind::kMbhX);
  d.mbh_y = aggregate_descriptor(cache, block.length, HistKind::kMbhY);
  return d;
}

}  // namespace lstmf
