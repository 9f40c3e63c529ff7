#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "lstmf/descript.hpp"
#include "lstmf/error.hpp"
#include "lstmf/flow.hpp"
#include "lstmf/random.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace lstmf;

namespace {

TrajectoryBlock block_from_steps(const std::vector<Vec2>& steps) {
  TrajectoryBlock b;
  b.length = static_cast<int>(steps.size());
  b.frame_width = 160;
  b.frame_height = 120;
  TrackPoint p{40, 50, 0};
  b.points.push_back(p);
  for (const Vec2& s : steps) {
    p.x += s.x;
    p.y += s.y;
    ++p.t;
    b.points.push_back(p);
  }
  return b;
}

CellHistogramCache repeated_cache(const GrayFrame& frame, const FlowField& flow, int frames) {
  const FrameHistograms maps(frame, flow, DescriptorParams{});
  CellHistogramCache cache;
  for (int f = 0; f < frames; ++f) cache.append(maps, 30, 30, 32);
  return cache;
}

double l2(const std::vector<double>& v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

}  // namespace

TEST_CASE("trajectory shape of constant motion") {
  for (int l : {15, 30}) {
    const auto s = trajectory_shape(block_from_steps(std::vector<Vec2>(static_cast<std::size_t>(l), {1, 0})));
    REQUIRE(s.size() == 30);
    for (int g = 0; g < 15; ++g) {
      CHECK(s[static_cast<std::size_t>(2 * g)] == doctest::Approx(1.0 / 15).epsilon(1e-12));
      CHECK(s[static_cast<std::size_t>(2 * g + 1)] == 0.0);
    }
  }
}

TEST_CASE("trajectory shape of a single step") {
  std::vector<Vec2> steps(15, {0, 0});
  steps[0] = {3, 4};
  const auto s = trajectory_shape(block_from_steps(steps));
  CHECK(s[0] == doctest::Approx(0.6));
  CHECK(s[1] == doctest::Approx(0.8));
  for (std::size_t i = 2; i < s.size(); ++i) CHECK(s[i] == 0.0);
}

TEST_CASE("trajectory shape is identical across lengths for constant velocity") {
  const auto base = trajectory_shape(block_from_steps(std::vector<Vec2>(15, {0.7, -0.3})));
  for (int l : {30, 45, 60, 75, 90}) {
    const auto s = trajectory_shape(block_from_steps(std::vector<Vec2>(static_cast<std::size_t>(l), {0.7, -0.3})));
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(s[i] - base[i]) < 1e-10);
  }
}

TEST_CASE("zero flow puts all HOF mass in the zero bin") {
  Rng rng(1);
  const GrayFrame frame = synth::render_shifted(synth::Texture::random(rng), 64, 64, 0, 0);
  const CellHistogramCache cache = repeated_cache(frame, FlowField(64, 64), 3);
  for (int f = 0; f < 3; ++f)
    for (int c = 0; c < kCellsPerFrame; ++c) {
      const auto h = cache.cell(HistKind::kHof, f, c);
      REQUIRE(h.size() == 9);
      CHECK(h[8] == 256.0);
      for (int b = 0; b < 8; ++b) CHECK(h[static_cast<std::size_t>(b)] == 0.0);
    }
}

TEST_CASE("horizontal ramp puts all HOG mass in the 0 degree bin") {
  GrayFrame ramp(64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) ramp.at(x, y) = static_cast<std::uint8_t>(2 * x + 20);
  const CellHistogramCache cache = repeated_cache(ramp, FlowField(64, 64), 1);
  for (int c = 0; c < kCellsPerFrame; ++c) {
    const auto h = cache.cell(HistKind::kHog, 0, c);
    CHECK(h[0] > 0.0);
    for (int b = 1; b < 8; ++b) CHECK(h[static_cast<std::size_t>(b)] == 0.0);
  }
}

TEST_CASE("constant flow has empty MBH histograms") {
  Rng rng(2);
  const GrayFrame frame = synth::render_shifted(synth::Texture::random(rng), 64, 64, 0, 0);
  const CellHistogramCache cache = repeated_cache(frame, FlowField::uniform(64, 64, {1, 0}), 1);
  for (HistKind k : {HistKind::kMbhX, HistKind::kMbhY})
    for (int c = 0; c < kCellsPerFrame; ++c)
      for (double v : cache.cell(k, 0, c)) CHECK(v == 0.0);
  const auto hof = cache.cell(HistKind::kHof, 0, 0);
  CHECK(hof[0] == 256.0);
}

TEST_CASE("equal per-frame histograms aggregate identically for every length") {
  Rng rng(3);
  const auto tex = synth::Texture::random(rng);
  const GrayFrame frame = synth::render_shifted(tex, 64, 64, 0, 0);
  FlowField flow(64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      flow.u(x, y) = std::sin(x * 0.3) * 2;
      flow.v(x, y) = std::cos(y * 0.2) * 1.5;
    }
  const CellHistogramCache cache = repeated_cache(frame, flow, 90);
  for (HistKind k : kHistKinds) {
    const auto base = aggregate_descriptor(cache, 15, k);
    for (int l : {30, 45, 60, 75, 90}) {
      const auto d = aggregate_descriptor(cache, l, k);
      for (std::size_t i = 0; i < d.size(); ++i) CHECK(d[i] == doctest::Approx(base[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("aggregation needs enough cached frames") {
  const CellHistogramCache cache = repeated_cache(GrayFrame(64, 64, 5), FlowField(64, 64), 15);
  CHECK_NOTHROW(aggregate_descriptor(cache, 15, HistKind::kHog));
  CHECK_THROWS_AS(aggregate_descriptor(cache, 30, HistKind::kHog), Error);
}

TEST_CASE("aggregated descriptors match the pixel-loop computation") {
  const FrameSequence clip = synth::sprite_clip(64, 64, 31, 12.0, 44);
  std::vector<FlowField> flows;
  for (std::size_t t = 0; t + 1 < clip.size(); ++t) flows.push_back(estimate_flow(clip.frames[t], clip.frames[t + 1]));
  TrajectoryBlock block = block_from_steps(std::vector<Vec2>(30, {0.4, 0.2}));
  block.points[0].x = 20;
  for (std::size_t i = 1; i < block.points.size(); ++i) block.points[i].x = block.points[i - 1].x + 0.4;
  block.start_frame = 0;
  block.frame_width = 64;
  block.frame_height = 64;
  const auto cache = compute_cell_histograms(block, clip.frames, flows);
  for (int l : {15, 30}) {
    for (HistKind k : kHistKinds) {
      const auto got = aggregate_descriptor(cache, l, k);
      const auto want = oracle::direct_descriptor(block, l, k, clip.frames, flows);
      REQUIRE(got.size() == want.size());
      double worst = 0;
      for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
      CHECK(worst < 1e-6);
    }
  }
}

TEST_CASE("root normalization") {
  const std::vector<double> ones{1, 1, 1, 1};
  for (double v : root_normalize(ones)) CHECK(v == 0.5);
  const std::vector<double> zero(5, 0.0);
  CHECK(root_normalize(zero) == zero);
  const std::vector<double> four{4};
  CHECK(root_normalize(four) == std::vector<double>{1.0});

  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(1 + rng.index(100));
    for (auto& x : v) x = rng.uniform() < 0.3 ? 0.0 : rng.uniform(0, 10);
    const double n = l2(root_normalize(v));
    const bool all_zero = std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
    if (all_zero)
      CHECK(n == 0.0);
    else
      CHECK(n == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("descriptor dimensions do not depend on length") {
  CHECK(kTrajDim == 30);
  CHECK(kHogDim == 96);
  CHECK(kHofDim == 108);
  CHECK(kMbhDim == 96);
  Rng rng(5);
  const GrayFrame frame = synth::render_shifted(synth::Texture::random(rng), 64, 64, 0, 0);
  const CellHistogramCache cache = repeated_cache(frame, FlowField::uniform(64, 64, {1, 0.5}), 90);
  for (int l : {15, 30, 45, 60, 75, 90}) {
    const DescriptorSet d = describe_block(block_from_steps(std::vector<Vec2>(static_cast<std::size_t>(l), {1, 0.5})), cache, 2.0);
    CHECK(d.length == l);
    CHECK(d.traj.size() == 30);
    CHECK(d.hog.size() == 96);
    CHECK(d.hof.size() == 108);
    CHECK(d.mbh_x.size() == 96);
    CHECK(d.mbh_y.size() == 96);
    CHECK(d.mean_x == doctest::Approx((40 + l / 2.0) * 2.0));
  }
}
