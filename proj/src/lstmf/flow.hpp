#pragma once

#include <array>
#include <span>
#include <vector>

#include "lstmf/media.hpp"
#include "lstmf/random.hpp"

namespace lstmf {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Vec2&) const = default;
};

// Dense displacement field; u/v are row-major like GrayFrame.
class FlowField {
 public:
  FlowField() = default;
  FlowField(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }

  double& u(int x, int y) { return u_[index(x, y)]; }
  double& v(int x, int y) { return v_[index(x, y)]; }
  double u(int x, int y) const { return u_[index(x, y)]; }
  double v(int x, int y) const { return v_[index(x, y)]; }

  std::span<const double> u_data() const { return u_; }
  std::span<const double> v_data() const { return v_; }
  std::span<double> u_data() { return u_; }
  std::span<double> v_data() { return v_; }

  static FlowField uniform(int width, int height, Vec2 d);

  bool operator==(const FlowField&) const = default;

 private:
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> u_;
  std::vector<double> v_;
};

// Farneback polynomial-expansion flow settings.
struct FlowParams {
  int window = 15;      // box window for the displacement solve
  int levels = 3;       // internal pyramid levels, including full resolution
  int iterations = 3;   // per level
  int poly_n = 5;       // half-size of the expansion neighborhood
  double poly_sigma = 1.1;
  double pyr_scale = 0.5;
};

FlowField estimate_flow(const GrayFrame& prev, const GrayFrame& next, const FlowParams& params = {});

// Component-wise median over the 3x3 neighborhood of round(p); indices are
// clamped at the border so nine samples are always used.
Vec2 median_flow_at(const FlowField& flow, Vec2 p);

struct Homography {
  std::array<double, 9> h{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Homography identity() { return {}; }
  Vec2 apply(Vec2 p) const;
  double determinant() const;
  bool is_identity() const { return h == identity().h; }
};

struct Correspondence {
  Vec2 from;
  Vec2 to;
};

struct RansacParams {
  double inlier_threshold = 1.5;
  int iterations = 500;
  int grid_stride = 16;
  double min_inlier_ratio = 0.25;
  double gradient_fraction = 0.1;  // "strong" = at least this share of the grid maximum
};

struct HomographyEstimate {
  Homography homography;
  bool fallback = false;  // identity returned because the fit was unusable
  std::size_t correspondences = 0;
  std::size_t inliers = 0;
};

// Grid samples (stride/2 + k*stride) at strong-gradient pixels of `prev`,
// matched through the flow.
std::vector<Correspondence> sample_correspondences(const GrayFrame& prev, const FlowField& flow,
                                                   const RansacParams& params = {});

// Normalized DLT least squares. Requires at least 4 correspondences.
Homography fit_homography(std::span<const Correspondence> pts, bool* ok = nullptr);

HomographyEstimate ransac_homography(std::span<const Correspondence> pts, const RansacParams& params,
                                     Rng& rng);

HomographyEstimate estimate_homography(const GrayFrame& prev, const GrayFrame& next,
                                       const FlowField& flow, const RansacParams& params, Rng& rng);

// Subtracts the displacement induced by `h` at every pixel.
FlowField stabilize_flow(const FlowField& flow, const Homography& h);

}  // namespace lstmf
