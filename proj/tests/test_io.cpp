#include <doctest.h>

#include <cmath>
#include <fstream>

#include "lstmf/config.hpp"
#include "lstmf/error.hpp"
#include "lstmf/feature_io.hpp"
#include "lstmf/random.hpp"
#include "temp_dir.hpp"

using namespace lstmf;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kGeneric;
}

DescriptorSet sample_descriptor(Rng& rng, int length) {
  DescriptorSet d;
  d.length = length;
  d.scale = 2;
  d.start_frame = 17;
  d.mean_x = 12.5;
  d.mean_y = 40.25;
  auto fill = [&](std::vector<double>& v, int n) {
    v.resize(static_cast<std::size_t>(n));
    for (auto& x : v) x = static_cast<float>(rng.uniform());
  };
  fill(d.traj, kTrajDim);
  fill(d.hog, kHogDim);
  fill(d.hof, kHofDim);
  fill(d.mbh_x, kMbhDim);
  fill(d.mbh_y, kMbhDim);
  return d;
}

}  // namespace

TEST_CASE("default config validates and round-trips through JSON") {
  const PipelineConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.tracker.lengths == std::vector<int>{15, 30, 45, 60, 75, 90});
  CHECK(cfg.encoder.gaussians == 256);
  CHECK(cfg.encoder.sample_budget == 256000);
  CHECK(cfg.svm.c == 100.0);
  const PipelineConfig back = PipelineConfig::from_json(cfg.to_json());
  CHECK(back.hash() == cfg.hash());
  CHECK(back.extraction_hash() == cfg.extraction_hash());
}

TEST_CASE("config hashes cover the right settings") {
  const PipelineConfig base;
  PipelineConfig seed = base;
  seed.seed = 99;
  CHECK(seed.extraction_hash() != base.extraction_hash());
  CHECK(seed.hash() != base.hash());

  PipelineConfig jobs = base;
  jobs.jobs = 8;
  CHECK(jobs.hash() == base.hash());

  PipelineConfig lengths = base;
  lengths.tracker.lengths = {15};
  CHECK(lengths.extraction_hash() != base.extraction_hash());

  PipelineConfig stab = base;
  stab.stabilize = false;
  CHECK(stab.extraction_hash() != base.extraction_hash());

  PipelineConfig svm = base;
  svm.svm.c = 1.0;
  CHECK(svm.extraction_hash() == base.extraction_hash());
  CHECK(svm.hash() != base.hash());
}

TEST_CASE("config rejects bad values and unknown keys") {
  PipelineConfig cfg;
  cfg.tracker.lengths = {15, 20};
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::kConfig);
  cfg = {};
  cfg.encoder.lengths = {30, 15};
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::kConfig);
  cfg = {};
  cfg.encoder.gaussians = 0;
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::kConfig);

  Json j = PipelineConfig{}.to_json();
  j["tracker"]["bogus"] = 1;
  CHECK(code_of([&] { PipelineConfig::from_json(j); }) == ErrorCode::kConfig);
  j = PipelineConfig{}.to_json();
  j["encoder"]["mode"] = "sideways";
  CHECK(code_of([&] { PipelineConfig::from_json(j); }) == ErrorCode::kConfig);
}

TEST_CASE("length lists parse") {
  CHECK(parse_lengths("15,30,45") == std::vector<int>{15, 30, 45});
  CHECK(code_of([] { parse_lengths("15,x"); }) == ErrorCode::kConfig);
  CHECK(code_of([] { parse_lengths(""); }) == ErrorCode::kConfig);
}

TEST_CASE("FNV-1a reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(hash_to_hex(0xabcULL) == "0000000000000abc");
}

TEST_CASE("feature files round trip") {
  TempDir dir("io");
  Rng rng(1);
  std::vector<DescriptorSet> written;
  {
    FeatureWriter w(dir.path() / "v.lstmf", {0x1234, "clip_7"});
    for (int l : {15, 15, 30, 45}) {
      written.push_back(sample_descriptor(rng, l));
      w.write(written.back());
    }
    w.close();
    CHECK(w.records() == 4);
  }
  FeatureHeader h;
  const auto back = read_feature_records(dir.path() / "v.lstmf", &h);
  CHECK(h.config_hash == 0x1234);
  CHECK(h.video_id == "clip_7");
  REQUIRE(back.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(back[i].length == written[i].length);
    CHECK(back[i].scale == 2);
    CHECK(back[i].start_frame == 17);
    CHECK(back[i].hof == written[i].hof);
    CHECK(back[i].traj == written[i].traj);
  }
}

TEST_CASE("truncated or foreign feature files are input errors") {
  TempDir dir("io");
  {
    std::ofstream f(dir.path() / "junk.lstmf", std::ios::binary);
    f << "not a feature file";
  }
  CHECK(code_of([&] { read_feature_header(dir.path() / "junk.lstmf"); }) == ErrorCode::kInput);
  CHECK(code_of([&] { read_feature_header(dir.path() / "missing.lstmf"); }) == ErrorCode::kInput);

  Rng rng(2);
  {
    FeatureWriter w(dir.path() / "t.lstmf", {1, "t"});
    w.write(sample_descriptor(rng, 15));
    w.close();
  }
  std::filesystem::resize_file(dir.path() / "t.lstmf", std::filesystem::file_size(dir.path() / "t.lstmf") - 3);
  CHECK(code_of([&] { read_feature_records(dir.path() / "t.lstmf"); }) == ErrorCode::kInput);
}

TEST_CASE("representation files round trip") {
  TempDir dir("io");
  VideoRepresentation rep;
  rep.video_id = "v1";
  rep.mode = PoolMode::kConcat;
  rep.lengths = {15, 30};
  rep.values = {0.5, -0.25, 0.125, 0.0};
  write_representation(dir.path() / "v1.lrep", rep, 0xfeed);
  std::uint64_t hash = 0;
  const auto back = read_representation(dir.path() / "v1.lrep", &hash);
  CHECK(hash == 0xfeed);
  CHECK(back.video_id == "v1");
  CHECK(back.mode == PoolMode::kConcat);
  CHECK(back.lengths == rep.lengths);
  CHECK(back.values == rep.values);
  CHECK(code_of([&] { read_representation(dir.path() / "none.lrep"); }) == ErrorCode::kManifestMismatch);
}
