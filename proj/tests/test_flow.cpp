#include <doctest.h>

#include <cmath>
#include <vector>

#include "lstmf/flow.hpp"
#include "lstmf/random.hpp"
#include "synthetic.hpp"

using namespace lstmf;

namespace {

bool all_zero(const FlowField& f) {
  for (double v : f.u_data())
    if (v != 0.0) return false;
  for (double v : f.v_data())
    if (v != 0.0) return false;
  return true;
}

FlowField induced_flow(int w, int h, const Homography& hm) {
  FlowField f(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Vec2 q = hm.apply({double(x), double(y)});
      f.u(x, y) = q.x - x;
      f.v(x, y) = q.y - y;
    }
  return f;
}

}  // namespace

TEST_CASE("flow between identical frames is exactly zero") {
  Rng rng(1);
  const auto tex = synth::Texture::random(rng);
  const GrayFrame a = synth::render_shifted(tex, 80, 64, 0, 0);
  CHECK(all_zero(estimate_flow(a, a)));
}

TEST_CASE("flow of constant frames is zero") {
  const GrayFrame a(64, 64, 90), b(64, 64, 140);
  CHECK(all_zero(estimate_flow(a, a)));
  CHECK(all_zero(estimate_flow(b, b)));
}

TEST_CASE("one pixel shift is recovered in the interior") {
  Rng rng(2);
  const auto tex = synth::Texture::random(rng);
  const GrayFrame a = synth::render_shifted(tex, 96, 96, 0, 0);
  const GrayFrame b = synth::render_shifted(tex, 96, 96, 1, 0);
  const FlowField f = estimate_flow(a, b);
  double epe = 0;
  int n = 0;
  for (int y = 8; y < 88; ++y)
    for (int x = 8; x < 88; ++x) {
      epe += std::hypot(f.u(x, y) - 1.0, f.v(x, y));
      ++n;
    }
  CHECK(epe / n < 0.25);
}

TEST_CASE("median flow lookups") {
  const FlowField uni = FlowField::uniform(20, 20, {1, 0});
  CHECK(median_flow_at(uni, {7.3, 4.6}) == Vec2{1, 0});

  FlowField f = FlowField::uniform(20, 20, {1, 0});
  f.u(10, 10) = 50;
  f.v(10, 10) = 50;
  CHECK(median_flow_at(f, {10, 10}) == Vec2{1, 0});

  // Corner: the clamped window holds (0,0) four times, (1,0) and (0,1) twice
  // and (1,1) once.
  FlowField g = FlowField::uniform(20, 20, {2, 0});
  g.u(0, 0) = 9;
  CHECK(median_flow_at(g, {0, 0}).x == 2);
  g.u(1, 1) = 9;
  CHECK(median_flow_at(g, {0, 0}).x == 9);
  g.u(1, 1) = 2;
  g.u(5, 5) = 9;
  CHECK(median_flow_at(g, {0, 0}).x == 2);
}

TEST_CASE("homography of zero flow is identity") {
  std::vector<Correspondence> pts;
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) pts.push_back({{x * 10.0, y * 10.0}, {x * 10.0, y * 10.0}});
  bool ok = false;
  const Homography h = fit_homography(pts, &ok);
  CHECK(ok);
  const Homography id;
  for (int i = 0; i < 9; ++i) CHECK(h.h[static_cast<std::size_t>(i)] == doctest::Approx(id.h[static_cast<std::size_t>(i)]).epsilon(1e-12));
}

TEST_CASE("pure translation gives translation homography") {
  std::vector<Correspondence> pts;
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 8; ++x) pts.push_back({{x * 9.0 + 3, y * 7.0 + 1}, {x * 9.0 + 5, y * 7.0 + 4}});
  const Homography h = fit_homography(pts);
  const double want[9] = {1, 0, 2, 0, 1, 3, 0, 0, 1};
  for (int i = 0; i < 9; ++i) CHECK(std::abs(h.h[static_cast<std::size_t>(i)] / h.h[8] - want[i]) < 1e-6);
}

TEST_CASE("ransac recovers translation under 40 percent outliers") {
  Rng gen(5);
  std::vector<Correspondence> pts;
  for (int i = 0; i < 200; ++i) {
    const Vec2 p{gen.uniform(0, 160), gen.uniform(0, 120)};
    if (i % 5 < 3)
      pts.push_back({p, {p.x + 2, p.y + 3}});
    else
      pts.push_back({p, {p.x + gen.uniform(-20, 20), p.y + gen.uniform(-20, 20)}});
  }
  Rng rng(derive_seed(9, "ransac"));
  const HomographyEstimate est = ransac_homography(pts, RansacParams{}, rng);
  CHECK_FALSE(est.fallback);
  for (const Vec2 p : {Vec2{0, 0}, Vec2{160, 0}, Vec2{0, 120}, Vec2{160, 120}, Vec2{80, 60}}) {
    const Vec2 q = est.homography.apply(p);
    CHECK(std::abs(q.x - p.x - 2) < 0.1);
    CHECK(std::abs(q.y - p.y - 3) < 0.1);
  }

  Rng again(derive_seed(9, "ransac"));
  const HomographyEstimate est2 = ransac_homography(pts, RansacParams{}, again);
  CHECK(est2.homography.h == est.homography.h);
  CHECK(est2.inliers == est.inliers);
}

TEST_CASE("degenerate correspondences fall back to identity") {
  std::vector<Correspondence> pts;
  for (int i = 0; i < 20; ++i) pts.push_back({{double(i), double(i)}, {i + 1.0, i + 1.0}});
  Rng rng(3);
  const HomographyEstimate est = ransac_homography(pts, RansacParams{}, rng);
  CHECK(est.fallback);
  CHECK(est.homography.is_identity());
  Rng rng2(3);
  CHECK(ransac_homography({}, RansacParams{}, rng2).fallback);
}

TEST_CASE("stabilization subtracts the induced flow") {
  Homography h;
  h.h = {1.01, 0.02, 2.5, -0.015, 0.99, -1.25, 1e-4, -5e-5, 1};
  const FlowField f = induced_flow(48, 40, h);
  const FlowField r = stabilize_flow(f, h);
  for (double v : r.u_data()) CHECK(std::abs(v) < 1e-9);
  for (double v : r.v_data()) CHECK(std::abs(v) < 1e-9);

  Homography t;
  t.h = {1, 0, 2, 0, 1, 3, 0, 0, 1};
  CHECK(all_zero(stabilize_flow(FlowField::uniform(30, 20, {2, 3}), t)));
}

TEST_CASE("stabilizing with identity is bitwise unchanged") {
  Rng rng(4);
  FlowField f(33, 21);
  for (auto& v : f.u_data()) v = rng.normal() * 3;
  for (auto& v : f.v_data()) v = rng.normal() * 3;
  CHECK(stabilize_flow(f, Homography::identity()) == f);
}

TEST_CASE("planar motion leaves a tiny residual after exact subtraction") {
  Homography h;
  h.h = {0.98, -0.03, 1.7, 0.025, 1.02, -0.6, 2e-4, 1e-4, 1};
  const FlowField r = stabilize_flow(induced_flow(160, 120, h), h);
  double worst = 0;
  for (std::size_t i = 0; i < r.u_data().size(); ++i)
    worst = std::max(worst, std::hypot(r.u_data()[i], r.v_data()[i]));
  CHECK(worst < 1e-6);
}

TEST_CASE("homography estimation on real frames is seed deterministic") {
  Rng trng(6);
  const auto tex = synth::Texture::random(trng);
  const GrayFrame a = synth::render_shifted(tex, 96, 80, 0, 0);
  const GrayFrame b = synth::render_shifted(tex, 96, 80, 1.5, -0.5);
  const FlowField f = estimate_flow(a, b);
  Rng r1(11), r2(11);
  const auto e1 = estimate_homography(a, b, f, RansacParams{}, r1);
  const auto e2 = estimate_homography(a, b, f, RansacParams{}, r2);
  CHECK(e1.homography.h == e2.homography.h);
  CHECK_FALSE(e1.fallback);
  const Vec2 q = e1.homography.apply({48, 40});
  CHECK(q.x - 48 == doctest::Approx(1.5).epsilon(0.1));
  CHECK(q.y - 40 == doctest::Approx(-0.5).epsilon(0.2));
}
