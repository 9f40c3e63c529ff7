#include "lstmf/flow.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "lstmf/error.hpp"

namespace lstmf {

FlowField::FlowField(int width, int height)
    : width_(width), height_(height),
      u_(static_cast<std::size_t>(width) * height, 0.0),
      v_(static_cast<std::size_t>(width) * height, 0.0) {}

FlowField FlowField::uniform(int width, int height, Vec2 d) {
  FlowField f(width, height);
  std::fill(f.u_.begin(), f.u_.end(), d.x);
  std::fill(f.v_.begin(), f.v_.end(), d.y);
  return f;
}

namespace {

// Multi-channel double image.
struct Plane {
  int w = 0;
  int h = 0;
  int ch = 1;
  std::vector<double> d;

  Plane() = default;
  Plane(int w_, int h_, int ch_ = 1) : w(w_), h(h_), ch(ch_), d(static_cast<std::size_t>(w_) * h_ * ch_, 0.0) {}

  double* px(int x, int y) { return d.data() + (static_cast<std::size_t>(y) * w + x) * ch; }
  const double* px(int x, int y) const { return d.data() + (static_cast<std::size_t>(y) * w + x) * ch; }
};

Plane to_plane(const GrayFrame& f) {
  Plane p(f.width(), f.height());
  auto src = f.pixels();
  std::copy(src.begin(), src.end(), p.d.begin());
  return p;
}

Plane gaussian_blur(const Plane& src, double sigma) {
  int ksize = static_cast<int>(std::lround(sigma * 5)) | 1;
  ksize = std::max(ksize, 3);
  const int r = ksize / 2;
  std::vector<double> k(static_cast<std::size_t>(ksize));
  double sum = 0;
  for (int i = -r; i <= r; ++i) sum += k[i + r] = std::exp(-i * i / (2 * sigma * sigma));
  for (auto& v : k) v /= sum;

  Plane tmp(src.w, src.h), out(src.w, src.h);
  for (int y = 0; y < src.h; ++y)
    for (int x = 0; x < src.w; ++x) {
      double acc = 0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * *src.px(std::clamp(x + i, 0, src.w - 1), y);
      *tmp.px(x, y) = acc;
    }
  for (int y = 0; y < src.h; ++y)
    for (int x = 0; x < src.w; ++x) {
      double acc = 0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * *tmp.px(x, std::clamp(y + i, 0, src.h - 1));
      *out.px(x, y) = acc;
    }
  return out;
}

// Pixel-center aligned bilinear resize, all channels.
Plane resize(const Plane& src, int w, int h) {
  if (w == src.w && h == src.h) return src;
  Plane dst(w, h, src.ch);
  const double sx = static_cast<double>(src.w) / w;
  const double sy = static_cast<double>(src.h) / h;
  for (int y = 0; y < h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, src.h - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.h - 1);
    const double wy = fy - y0;
    for (int x = 0; x < w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, src.w - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.w - 1);
      const double wx = fx - x0;
      for (int c = 0; c < src.ch; ++c) {
        const double top = (1 - wx) * src.px(x0, y0)[c] + wx * src.px(x1, y0)[c];
        const double bot = (1 - wx) * src.px(x0, y1)[c] + wx * src.px(x1, y1)[c];
        dst.px(x, y)[c] = (1 - wy) * top + wy * bot;
      }
    }
  }
  return dst;
}

struct PolyKernel {
  std::vector<double> g, xg, xxg;  // indexed k + n
  double ig11 = 0, ig03 = 0, ig33 = 0, ig55 = 0;
};

PolyKernel make_poly_kernel(int n, double sigma) {
  PolyKernel k;
  const std::size_t size = static_cast<std::size_t>(2 * n + 1);
  k.g.resize(size);
  k.xg.resize(size);
  k.xxg.resize(size);
  double s = 0;
  for (int x = -n; x <= n; ++x) s += k.g[x + n] = std::exp(-x * x / (2 * sigma * sigma));
  for (int x = -n; x <= n; ++x) {
    k.g[x + n] /= s;
    k.xg[x + n] = x * k.g[x + n];
    k.xxg[x + n] = x * x * k.g[x + n];
  }

  // Gram matrix of the basis {1, x, y, x^2, y^2, xy} under the separable
  // Gaussian applicability.
  Eigen::Matrix<double, 6, 6> G = Eigen::Matrix<double, 6, 6>::Zero();
  for (int y = -n; y <= n; ++y)
    for (int x = -n; x <= n; ++x) {
      const double w = k.g[y + n] * k.g[x + n];
      const double b[6] = {1.0, double(x), double(y), double(x) * x, double(y) * y, double(x) * y};
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) G(i, j) += w * b[i] * b[j];
    }
  const Eigen::Matrix<double, 6, 6> inv = G.inverse();
  k.ig11 = inv(1, 1);
  k.ig03 = inv(0, 3);
  k.ig33 = inv(3, 3);
  k.ig55 = inv(5, 5);
  return k;
}

// Channels: bx, by, axx, ayy, axy for f(x) ~ x'Ax + b'x + c with
// A = [[axx, axy/2], [axy/2, ayy]].
constexpr int kPolyChannels = 5;

Plane poly_expand(const Plane& src, const PolyKernel& k, int n) {
  const int w = src.w, h = src.h;
  Plane out(w, h, kPolyChannels);
  std::vector<double> row(static_cast<std::size_t>(w + 2 * n) * 3);
  auto R = [&](int x, int c) -> double& { return row[static_cast<std::size_t>(x + n) * 3 + c]; };

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double f0 = *src.px(x, y);
      double r0 = f0 * k.g[n], r1 = 0, r2 = 0;
      for (int i = 1; i <= n; ++i) {
        const double a = *src.px(x, std::max(y - i, 0));
        const double b = *src.px(x, std::min(y + i, h - 1));
        r0 += k.g[n + i] * (a + b);
        r1 += k.xg[n + i] * (b - a);
        r2 += k.xxg[n + i] * (a + b);
      }
      R(x, 0) = r0;
      R(x, 1) = r1;
      R(x, 2) = r2;
    }
    for (int i = 1; i <= n; ++i)
      for (int c = 0; c < 3; ++c) {
        R(-i, c) = R(0, c);
        R(w - 1 + i, c) = R(w - 1, c);
      }
    for (int x = 0; x < w; ++x) {
      double b1 = R(x, 0) * k.g[n], b2 = 0, b3 = R(x, 1) * k.g[n], b4 = 0, b5 = R(x, 2) * k.g[n], b6 = 0;
      for (int i = 1; i <= n; ++i) {
        const double g = k.g[n + i], xg = k.xg[n + i], xxg = k.xxg[n + i];
        b1 += (R(x + i, 0) + R(x - i, 0)) * g;
        b2 += (R(x + i, 0) - R(x - i, 0)) * xg;
        b4 += (R(x + i, 0) + R(x - i, 0)) * xxg;
        b3 += (R(x + i, 1) + R(x - i, 1)) * g;
        b6 += (R(x + i, 1) - R(x - i, 1)) * xg;
        b5 += (R(x + i, 2) + R(x - i, 2)) * g;
      }
      double* o = out.px(x, y);
      o[0] = b2 * k.ig11;
      o[1] = b3 * k.ig11;
      o[2] = b1 * k.ig03 + b4 * k.ig33;
      o[3] = b1 * k.ig03 + b5 * k.ig33;
      o[4] = b6 * k.ig55;
    }
  }
  return out;
}

void sample_clamped(const Plane& p, double fx, double fy, double* out) {
  fx = std::clamp(fx, 0.0, p.w - 1.0);
  fy = std::clamp(fy, 0.0, p.h - 1.0);
  const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
  const int x1 = std::min(x0 + 1, p.w - 1), y1 = std::min(y0 + 1, p.h - 1);
  const double ax = fx - x0, ay = fy - y0;
  const double w00 = (1 - ax) * (1 - ay), w01 = ax * (1 - ay), w10 = (1 - ax) * ay, w11 = ax * ay;
  const double *p00 = p.px(x0, y0), *p01 = p.px(x1, y0), *p10 = p.px(x0, y1), *p11 = p.px(x1, y1);
  for (int c = 0; c < p.ch; ++c) out[c] = w00 * p00[c] + w01 * p01[c] + w10 * p10[c] + w11 * p11[c];
}

// Per-pixel normal equations: g11, g12, g22, h1, h2.
Plane update_matrices(const Plane& r0, const Plane& r1, const Plane& flow) {
  constexpr int kBorder = 5;
  static constexpr double kBorderWeight[kBorder] = {0.14, 0.14, 0.4472, 0.4472, 0.4472};
  const int w = r0.w, h = r0.h;
  Plane m(w, h, 5);
  double s[kPolyChannels];
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double dx = flow.px(x, y)[0], dy = flow.px(x, y)[1];
      sample_clamped(r1, x + dx, y + dy, s);
      const double* p = r0.px(x, y);
      double axx = (p[2] + s[2]) * 0.5;
      double ayy = (p[3] + s[3]) * 0.5;
      double q = (p[4] + s[4]) * 0.25;
      double bx = (p[0] - s[0]) * 0.5 + axx * dx + q * dy;
      double by = (p[1] - s[1]) * 0.5 + q * dx + ayy * dy;
      if (x < kBorder || y < kBorder || x >= w - kBorder || y >= h - kBorder) {
        double scale = 1.0;
        if (x < kBorder) scale *= kBorderWeight[x];
        if (x >= w - kBorder) scale *= kBorderWeight[w - x - 1];
        if (y < kBorder) scale *= kBorderWeight[y];
        if (y >= h - kBorder) scale *= kBorderWeight[h - y - 1];
        axx *= scale;
        ayy *= scale;
        q *= scale;
        bx *= scale;
        by *= scale;
      }
      double* o = m.px(x, y);
      o[0] = axx * axx + q * q;
      o[1] = q * (axx + ayy);
      o[2] = ayy * ayy + q * q;
      o[3] = axx * bx + q * by;
      o[4] = q * bx + ayy * by;
    }
  return m;
}

Plane box_mean(const Plane& src, int window) {
  // Running sums over the clamped window, horizontal then vertical.
  const int r = window / 2;
  const int ch = src.ch;
  const double norm = 1.0 / (static_cast<double>(2 * r + 1) * (2 * r + 1));
  Plane tmp(src.w, src.h, ch), out(src.w, src.h, ch);
  std::vector<double> acc(static_cast<std::size_t>(ch));
  for (int y = 0; y < src.h; ++y) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int i = -r; i <= r; ++i) {
      const double* p = src.px(std::clamp(i, 0, src.w - 1), y);
      for (int c = 0; c < ch; ++c) acc[c] += p[c];
    }
    for (int x = 0; x < src.w; ++x) {
      double* o = tmp.px(x, y);
      for (int c = 0; c < ch; ++c) o[c] = acc[c];
      const double* add = src.px(std::min(x + r + 1, src.w - 1), y);
      const double* sub = src.px(std::max(x - r, 0), y);
      for (int c = 0; c < ch; ++c) acc[c] += add[c] - sub[c];
    }
  }
  for (int x = 0; x < src.w; ++x) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int i = -r; i <= r; ++i) {
      const double* p = tmp.px(x, std::clamp(i, 0, src.h - 1));
      for (int c = 0; c < ch; ++c) acc[c] += p[c];
    }
    for (int y = 0; y < src.h; ++y) {
      double* o = out.px(x, y);
      for (int c = 0; c < ch; ++c) o[c] = acc[c] * norm;
      const double* add = tmp.px(x, std::min(y + r + 1, src.h - 1));
      const double* sub = tmp.px(x, std::max(y - r, 0));
      for (int c = 0; c < ch; ++c) acc[c] += add[c] - sub[c];
    }
  }
  return out;
}

void solve_flow(const Plane& m, Plane& flow) {
  for (int y = 0; y < m.h; ++y)
    for (int x = 0; x < m.w; ++x) {
      const double* g = m.px(x, y);
      const double idet = 1.0 / (g[0] * g[2] - g[1] * g[1] + 1e-3);
      double* f = flow.px(x, y);
      f[0] = (g[2] * g[3] - g[1] * g[4]) * idet;
      f[1] = (g[0] * g[4] - g[1] * g[3]) * idet;
    }
}

}  // namespace

FlowField estimate_flow(const GrayFrame& prev, const GrayFrame& next, const FlowParams& params) {
  if (prev.width() != next.width() || prev.height() != next.height())
    fail(ErrorCode::kInvalidArgument, "estimate_flow: frame dimensions differ");
  const int W = prev.width(), H = prev.height();
  const Plane img[2] = {to_plane(prev), to_plane(next)};
  const PolyKernel kernel = make_poly_kernel(params.poly_n, params.poly_sigma);

  constexpr int kMinLevelSide = 16;
  int levels = 1;
  for (double s = params.pyr_scale; levels < params.levels; s *= params.pyr_scale) {
    if (std::min(W, H) * s < kMinLevelSide) break;
    ++levels;
  }

  Plane flow;
  for (int k = levels - 1; k >= 0; --k) {
    const double scale = std::pow(params.pyr_scale, k);
    const int w = k == 0 ? W : static_cast<int>(std::lround(W * scale));
    const int h = k == 0 ? H : static_cast<int>(std::lround(H * scale));

    if (flow.d.empty()) {
      flow = Plane(w, h, 2);
    } else {
      flow = resize(flow, w, h);
      for (auto& v : flow.d) v /= params.pyr_scale;
    }

    Plane r[2];
    for (int i = 0; i < 2; ++i) {
      if (k == 0) {
        r[i] = poly_expand(img[i], kernel, params.poly_n);
      } else {
        const double sigma = (1.0 / scale - 1.0) * 0.5;
        r[i] = poly_expand(resize(gaussian_blur(img[i], sigma), w, h), kernel, params.poly_n);
      }
    }

    Plane m = update_matrices(r[0], r[1], flow);
    for (int it = 0; it < params.iterations; ++it) {
      solve_flow(box_mean(m, params.window), flow);
      if (it + 1 < params.iterations) m = update_matrices(r[0], r[1], flow);
    }
  }

  FlowField out(W, H);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      out.u(x, y) = flow.px(x, y)[0];
      out.v(x, y) = flow.px(x, y)[1];
    }
  return out;
}

Vec2 median_flow_at(const FlowField& flow, Vec2 p) {
  if (!(p.x >= 0 && p.y >= 0 && p.x <= flow.width() - 1 && p.y <= flow.height() - 1))
    fail(ErrorCode::kInvalidArgument, "median_flow_at: point outside the flow field");
  const int cx = static_cast<int>(std::lround(p.x));
  const int cy = static_cast<int>(std::lround(p.y));
  std::array<double, 9> us, vs;
  int n = 0;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx, ++n) {
      const int x = std::clamp(cx + dx, 0, flow.width() - 1);
      const int y = std::clamp(cy + dy, 0, flow.height() - 1);
      us[n] = flow.u(x, y);
      vs[n] = flow.v(x, y);
    }
  std::nth_element(us.begin(), us.begin() + 4, us.end());
  std::nth_element(vs.begin(), vs.begin() + 4, vs.end());
  return {us[4], vs[4]};
}

Vec2 Homography::apply(Vec2 p) const {
  const double z = h[6] * p.x + h[7] * p.y + h[8];
  return {(h[0] * p.x + h[1] * p.y + h[2]) / z, (h[3] * p.x + h[4] * p.y + h[5]) / z};
}

double Homography::determinant() const {
  return h[0] * (h[4] * h[8] - h[5] * h[7]) - h[1] * (h[3] * h[8] - h[5] * h[6]) +
         h[2] * (h[3] * h[7] - h[4] * h[6]);
}

std::vector<Correspondence> sample_correspondences(const GrayFrame& prev, const FlowField& flow,
                                                   const RansacParams& params) {
  if (prev.width() != flow.width() || prev.height() != flow.height())
    fail(ErrorCode::kInvalidArgument, "sample_correspondences: frame and flow dimensions differ");
  const int stride = params.grid_stride;
  struct Candidate {
    int x, y;
    double mag;
  };
  std::vector<Candidate> cands;
  double max_mag = 0;
  for (int y = stride / 2; y < prev.height(); y += stride)
    for (int x = stride / 2; x < prev.width(); x += stride) {
      const int xl = std::max(x - 1, 0), xr = std::min(x + 1, prev.width() - 1);
      const int yu = std::max(y - 1, 0), yd = std::min(y + 1, prev.height() - 1);
      const double gx = double(prev.at(xr, y)) - prev.at(xl, y);
      const double gy = double(prev.at(x, yd)) - prev.at(x, yu);
      const double mag = std::hypot(gx, gy);
      cands.push_back({x, y, mag});
      max_mag = std::max(max_mag, mag);
    }
  std::vector<Correspondence> out;
  if (max_mag <= 0) return out;
  for (const auto& c : cands) {
    if (c.mag <= 0 || c.mag < params.gradient_fraction * max_mag) continue;
    const Vec2 from{double(c.x), double(c.y)};
    out.push_back({from, {from.x + flow.u(c.x, c.y), from.y + flow.v(c.x, c.y)}});
  }
  return out;
}

namespace {

Eigen::Matrix3d normalizing_transform(std::span<const Correspondence> pts, bool source) {
  double cx = 0, cy = 0;
  for (const auto& c : pts) {
    const Vec2& p = source ? c.from : c.to;
    cx += p.x;
    cy += p.y;
  }
  cx /= pts.size();
  cy /= pts.size();
  double dist = 0;
  for (const auto& c : pts) {
    const Vec2& p = source ? c.from : c.to;
    dist += std::hypot(p.x - cx, p.y - cy);
  }
  dist /= pts.size();
  const double s = dist > 0 ? std::sqrt(2.0) / dist : 1.0;
  Eigen::Matrix3d t;
  t << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
  return t;
}

bool collinear(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double area = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  return std::abs(area) < 1e-6;
}

bool degenerate_sample(const std::array<const Correspondence*, 4>& s) {
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      for (int k = j + 1; k < 4; ++k)
        if (collinear(s[i]->from, s[j]->from, s[k]->from) || collinear(s[i]->to, s[j]->to, s[k]->to))
          return true;
  return false;
}

double transfer_error(const Homography& h, const Correspondence& c) {
  const Vec2 p = h.apply(c.from);
  return std::hypot(p.x - c.to.x, p.y - c.to.y);
}

}  // namespace

Homography fit_homography(std::span<const Correspondence> pts, bool* ok) {
  if (ok) *ok = false;
  if (pts.size() < 4) return Homography::identity();
  const Eigen::Matrix3d t1 = normalizing_transform(pts, true);
  const Eigen::Matrix3d t2 = normalizing_transform(pts, false);

  Eigen::MatrixXd a(2 * pts.size(), 9);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Eigen::Vector3d p = t1 * Eigen::Vector3d(pts[i].from.x, pts[i].from.y, 1.0);
    const Eigen::Vector3d q = t2 * Eigen::Vector3d(pts[i].to.x, pts[i].to.y, 1.0);
    const double x = p.x(), y = p.y(), u = q.x(), v = q.y();
    a.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    a.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }
  Eigen::Matrix3d hn;
  if (pts.size() == 4) {
    // Exactly determined: fix h22 = 1 and solve the 8x8 system.
    const Eigen::Matrix<double, 8, 8> m = a.leftCols(8);
    const Eigen::Matrix<double, 8, 1> rhs = -a.col(8);
    const Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(m);
    if (!lu.isInvertible()) return Homography::identity();
    const Eigen::Matrix<double, 8, 1> hv = lu.solve(rhs);
    hn << hv(0), hv(1), hv(2), hv(3), hv(4), hv(5), hv(6), hv(7), 1.0;
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const Eigen::VectorXd hv = svd.matrixV().col(8);
    hn << hv(0), hv(1), hv(2), hv(3), hv(4), hv(5), hv(6), hv(7), hv(8);
  }
  Eigen::Matrix3d hm = t2.inverse() * hn * t1;
  if (std::abs(hm(2, 2)) < 1e-12) return Homography::identity();
  hm /= hm(2, 2);

  Homography out;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out.h[static_cast<std::size_t>(r * 3 + c)] = hm(r, c);
  if (!std::isfinite(out.determinant()) || std::abs(out.determinant()) <= 1e-12) return Homography::identity();
  if (ok) *ok = true;
  return out;
}

HomographyEstimate ransac_homography(std::span<const Correspondence> pts, const RansacParams& params,
                                     Rng& rng) {
  HomographyEstimate est;
  est.correspondences = pts.size();
  est.fallback = true;
  if (pts.size() < 4) return est;

  std::size_t best_count = 0;
  double best_err = 0;
  Homography best;
  for (int it = 0; it < params.iterations; ++it) {
    std::array<std::size_t, 4> idx{};
    for (int i = 0; i < 4; ++i) {
      bool dup;
      do {
        idx[i] = rng.index(pts.size());
        dup = std::find(idx.begin(), idx.begin() + i, idx[i]) != idx.begin() + i;
      } while (dup);
    }
    const std::array<const Correspondence*, 4> sample = {&pts[idx[0]], &pts[idx[1]], &pts[idx[2]], &pts[idx[3]]};
    if (degenerate_sample(sample)) continue;
    const Correspondence four[4] = {*sample[0], *sample[1], *sample[2], *sample[3]};
    bool ok = false;
    const Homography h = fit_homography(four, &ok);
    if (!ok) continue;
    std::size_t count = 0;
    double err = 0;
    for (const auto& c : pts) {
      const double e = transfer_error(h, c);
      if (e < params.inlier_threshold) {
        ++count;
        err += e;
      }
    }
    if (count > best_count || (count == best_count && count > 0 && err < best_err)) {
      best_count = count;
      best_err = err;
      best = h;
    }
  }
  if (best_count < 4) return est;

  std::vector<Correspondence> inliers;
  for (const auto& c : pts)
    if (transfer_error(best, c) < params.inlier_threshold) inliers.push_back(c);
  bool ok = false;
  const Homography refit = fit_homography(inliers, &ok);
  if (!ok) return est;

  std::size_t count = 0;
  for (const auto& c : pts)
    if (transfer_error(refit, c) < params.inlier_threshold) ++count;
  est.inliers = count;
  if (static_cast<double>(count) < params.min_inlier_ratio * static_cast<double>(pts.size())) return est;
  est.homography = refit;
  est.fallback = false;
  return est;
}

HomographyEstimate estimate_homography(const GrayFrame& prev, const GrayFrame& next,
                                       const FlowField& flow, const RansacParams& params, Rng& rng) {
  if (prev.width() != next.width() || prev.height() != next.height())
    fail(ErrorCode::kInvalidArgument, "estimate_homography: frame dimensions differ");
  const auto pts = sample_correspondences(prev, flow, params);
  return ransac_homography(pts, params, rng);
}

FlowField stabilize_flow(const FlowField& flow, const Homography& h) {
  FlowField out = flow;
  for (int y = 0; y < flow.height(); ++y)
    for (int x = 0; x < flow.width(); ++x) {
      const Vec2 q = h.apply({double(x), double(y)});
      out.u(x, y) = flow.u(x, y) - (q.x - x);
      out.v(x, y) = flow.v(x, y) - (q.y - y);
    }
  return out;
}

}  // namespace lstmf
