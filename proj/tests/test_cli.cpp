// End-to-end runs of the command-line tool.
#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "lstmf/encode.hpp"
#include "lstmf/feature_io.hpp"
#include "lstmf/media.hpp"
#include "lstmf/random.hpp"
#include "synthetic.hpp"
#include "temp_dir.hpp"

namespace fs = std::filesystem;
using namespace lstmf;

namespace {

struct Run {
  int status = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run lstmf_cli(const std::string& args, const fs::path& scratch) {
  const fs::path err = scratch / "stderr.txt";
  const std::string cmd = std::string(LSTMF_CLI_PATH) + " " + args + " 2>" + err.string();
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int st = pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  r.err = slurp(err);
  return r;
}

std::map<int, long> block_counts(const std::string& summary) {
  std::map<int, long> out;
  const std::regex re(" l([0-9]+)=([0-9]+)");
  for (auto it = std::sregex_iterator(summary.begin(), summary.end(), re); it != std::sregex_iterator(); ++it)
    out[std::stoi((*it)[1])] = std::stol((*it)[2]);
  return out;
}

// Ten 64x64 clips over five groups: even indices oscillate fast, odd slowly.
struct Corpus {
  TempDir dir{"cli"};
  std::vector<std::string> ids;
  std::string features;  // space-separated feature paths

  Corpus() {
    fs::create_directories(dir.path() / "clips");
    for (int i = 0; i < 10; ++i) {
      const std::string id = "clip" + std::to_string(i);
      write_y4m(dir.path() / "clips" / (id + ".y4m"),
                synth::sprite_clip(64, 64, 50, i % 2 == 0 ? 10.0 : 60.0, derive_seed(31, "cli", static_cast<std::uint64_t>(i))));
      ids.push_back(id);
    }
    std::string inputs;
    for (const auto& id : ids) {
      inputs += " " + (dir.path() / "clips" / (id + ".y4m")).string();
      features += " " + (dir.path() / "feat" / (id + ".lstmf")).string();
    }
    const Run r = lstmf_cli("--jobs 4 extract --lengths 15,30,45" + inputs + " -o " + (dir.path() / "feat").string(),
                            dir.path());
    REQUIRE(r.status == 0);
    const Run f = lstmf_cli("--seed 5 fit-encoder" + features + " --gaussians 4 --budget 4000 -o " +
                                (dir.path() / "enc.json").string(),
                            dir.path());
    REQUIRE(f.status == 0);
    const Run e = lstmf_cli("encode" + features + " --encoder " + (dir.path() / "enc.json").string() + " -o " +
                                (dir.path() / "reps").string(),
                            dir.path());
    REQUIRE(e.status == 0);
    std::ofstream m(dir.path() / "manifest.jsonl");
    for (int i = 0; i < 10; ++i)
      m << nlohmann::json{{"id", ids[static_cast<std::size_t>(i)]},
                          {"labels", {i % 2 == 0 ? "fast" : "slow"}},
                          {"group", "g" + std::to_string(i / 2)},
                          {"split", i < 6 ? "train" : "test"}}
               .dump()
        << "\n";
  }

  fs::path path(const std::string& rel) const { return dir.path() / rel; }
  std::string arg(const std::string& rel) const { return path(rel).string(); }
};

Corpus& corpus() {
  static Corpus c;
  return c;
}

}  // namespace

TEST_CASE("usage errors exit with the invalid-argument code") {
  TempDir dir("cli");
  CHECK(lstmf_cli("", dir.path()).status == 8);
  CHECK(lstmf_cli("frobnicate", dir.path()).status == 8);
  CHECK(lstmf_cli("extract --bogus x -o y", dir.path()).status == 8);
  CHECK(lstmf_cli("evaluate --manifest m --metric nope", dir.path()).status == 8);
  CHECK(lstmf_cli("--help", dir.path()).status == 0);
}

TEST_CASE("extract: block counts do not increase with length") {
  TempDir dir("cli");
  write_y4m(dir.path() / "t.y4m", synth::translation_clip(96, 96, 120, 0.6, 0.3, 3));
  const Run r = lstmf_cli("extract " + (dir.path() / "t.y4m").string() + " --stabilize off -o " +
                              (dir.path() / "t.lstmf").string(),
                          dir.path());
  REQUIRE(r.status == 0);
  const auto counts = block_counts(r.out);
  REQUIRE(counts.size() == 6);
  long prev = counts.at(15);
  CHECK(prev > 0);
  for (const auto& [l, c] : counts) {
    CHECK(c <= prev);
    prev = c;
  }
  long total = 0;
  for (const auto& [l, c] : counts) total += c;
  CHECK(read_feature_records(dir.path() / "t.lstmf").size() == static_cast<std::size_t>(total));

  SUBCASE("reruns are byte-identical") {
    const Run again = lstmf_cli("extract " + (dir.path() / "t.y4m").string() + " --stabilize off -o " +
                                    (dir.path() / "t2.lstmf").string(),
                                dir.path());
    REQUIRE(again.status == 0);
    CHECK(slurp(dir.path() / "t.lstmf") == slurp(dir.path() / "t2.lstmf"));
  }
}

TEST_CASE("extract: a clip shorter than the shortest block gives no features") {
  TempDir dir("cli");
  write_y4m(dir.path() / "short.y4m", synth::translation_clip(64, 64, 10, 1, 0, 4));
  const Run r = lstmf_cli("extract " + (dir.path() / "short.y4m").string() + " -o " + (dir.path() / "s.lstmf").string(),
                          dir.path());
  CHECK(r.status == 0);
  CHECK(r.err.find("warning") != std::string::npos);
  FeatureHeader h;
  CHECK(read_feature_records(dir.path() / "s.lstmf", &h).empty());
  CHECK(h.video_id == "short");

  SUBCASE("and an encoder cannot be fit from it") {
    const Run f = lstmf_cli("fit-encoder " + (dir.path() / "s.lstmf").string() + " --gaussians 2 --budget 100 -o " +
                                (dir.path() / "e.json").string(),
                            dir.path());
    CHECK(f.status == 4);
  }
}

TEST_CASE("extract: unreadable input and bad configuration") {
  TempDir dir("cli");
  CHECK(lstmf_cli("extract " + (dir.path() / "none.y4m").string() + " -o " + (dir.path() / "x.lstmf").string(),
                  dir.path())
            .status == 2);
  write_y4m(dir.path() / "c.y4m", synth::translation_clip(64, 64, 20, 1, 0, 5));
  CHECK(lstmf_cli("extract " + (dir.path() / "c.y4m").string() + " --lengths 15,20 -o " +
                      (dir.path() / "x.lstmf").string(),
                  dir.path())
            .status == 3);
  {
    std::ofstream cfg(dir.path() / "cfg.json");
    cfg << "{\"tracker\": {\"no_such_key\": 1}}";
  }
  CHECK(lstmf_cli("--config " + (dir.path() / "cfg.json").string() + " extract " + (dir.path() / "c.y4m").string() +
                      " -o " + (dir.path() / "x.lstmf").string(),
                  dir.path())
            .status == 3);
}

TEST_CASE("fit-encoder: same seed gives the same encoder") {
  Corpus& c = corpus();
  const Run r = lstmf_cli("--seed 5 fit-encoder" + c.features + " --gaussians 4 --budget 4000 -o " + c.arg("enc2.json"),
                          c.dir.path());
  REQUIRE(r.status == 0);
  CHECK(slurp(c.path("enc.json")) == slurp(c.path("enc2.json")));
  const auto j = nlohmann::json::parse(slurp(c.path("enc.json")));
  CHECK(j.contains("per_type"));
  CHECK(j.at("lengths") == nlohmann::json({15, 30, 45}));
}

TEST_CASE("encode: joint and concat agree on a single length") {
  Corpus& c = corpus();
  const std::string base = "encode" + c.features + " --encoder " + c.arg("enc.json") + " --lengths 15";
  REQUIRE(lstmf_cli(base + " --mode joint -o " + c.arg("j15"), c.dir.path()).status == 0);
  REQUIRE(lstmf_cli(base + " --mode concat -o " + c.arg("c15"), c.dir.path()).status == 0);
  for (const auto& id : c.ids) {
    const auto a = read_representation(c.path("j15") / (id + ".lrep"));
    const auto b = read_representation(c.path("c15") / (id + ".lrep"));
    CHECK(a.values == b.values);
  }
}

TEST_CASE("encode: lengths outside the encoder and foreign feature files are rejected") {
  Corpus& c = corpus();
  CHECK(lstmf_cli("encode" + c.features + " --encoder " + c.arg("enc.json") + " --lengths 60 -o " + c.arg("bad"),
                  c.dir.path())
            .status == 5);
  const std::string clip = c.arg("clips/clip0.y4m");
  REQUIRE(lstmf_cli("extract " + clip + " --lengths 15,30,45 --stabilize off -o " + c.arg("raw.lstmf"), c.dir.path())
              .status == 0);
  const Run r = lstmf_cli("encode " + c.arg("raw.lstmf") + " --encoder " + c.arg("enc.json") + " -o " + c.arg("bad"),
                          c.dir.path());
  CHECK(r.status == 7);
  CHECK_FALSE(fs::exists(c.path("bad") / "clip0.lrep"));
}

TEST_CASE("evaluate: split accuracy lies in the unit interval") {
  Corpus& c = corpus();
  const Run r = lstmf_cli("evaluate --manifest " + c.arg("manifest.jsonl") + " --reps " + c.arg("reps") +
                              " --protocol split --metric macc",
                          c.dir.path());
  REQUIRE(r.status == 0);
  const auto j = nlohmann::json::parse(r.out);
  const double v = j.at("value").get<double>();
  CHECK(v >= 0.0);
  CHECK(v <= 1.0);
  CHECK(j.at("per_fold").size() == 1);
}

TEST_CASE("evaluate: leave-one-group-out gives one fold per group") {
  Corpus& c = corpus();
  const Run r = lstmf_cli("evaluate --manifest " + c.arg("manifest.jsonl") + " --reps " + c.arg("reps") +
                              " --protocol logo --metric macc -o " + c.arg("logo.json"),
                          c.dir.path());
  REQUIRE(r.status == 0);
  const auto j = nlohmann::json::parse(slurp(c.path("logo.json")));
  CHECK(j.at("per_fold").size() == 5);
  CHECK(j.at("protocol") == "logo");
}

TEST_CASE("evaluate and train report missing representations") {
  Corpus& c = corpus();
  {
    std::ofstream m(c.path("extra.jsonl"));
    m << slurp(c.path("manifest.jsonl"));
    m << R"({"id":"ghost","labels":["fast"],"group":"g9","split":"test"})" << "\n";
  }
  CHECK(lstmf_cli("evaluate --manifest " + c.arg("extra.jsonl") + " --reps " + c.arg("reps"), c.dir.path()).status ==
        6);
  CHECK(lstmf_cli("train --manifest " + c.arg("manifest.jsonl") + " --reps " + c.arg("reps") + " -o " +
                      c.arg("model.json"),
                  c.dir.path())
            .status == 0);
  CHECK(fs::exists(c.path("model.json")));
}

TEST_CASE("evaluate: mean average precision on a hand-built case") {
  TempDir dir("cli");
  fs::create_directories(dir.path() / "reps");
  struct Item {
    const char* id;
    double x, y;
    std::vector<std::string> labels;
    const char* split;
  };
  // Class a is ranked by x, class b by y; each test ranking is pos, neg, pos.
  const std::vector<Item> items = {
      {"t1", 1, 1, {"a", "b"}, "train"}, {"t2", 1, 0, {"a"}, "train"},     {"t3", 0, 1, {"b"}, "train"},
      {"t4", 0, 0, {"c"}, "train"},      {"e1", 0.9, 0.1, {"a", "b"}, "test"}, {"e2", 0.8, 0.9, {"b"}, "test"},
      {"e3", 0.1, 0.5, {"a"}, "test"}};
  std::ofstream m(dir.path() / "m.jsonl");
  for (const auto& it : items) {
    VideoRepresentation rep;
    rep.video_id = it.id;
    rep.lengths = {15};
    rep.values = {it.x, it.y};
    write_representation(dir.path() / "reps" / (std::string(it.id) + ".lrep"), rep, 42);
    m << nlohmann::json{{"id", it.id}, {"labels", it.labels}, {"group", "g"}, {"split", it.split}}.dump() << "\n";
  }
  m.close();
  const Run r = lstmf_cli("evaluate --manifest " + (dir.path() / "m.jsonl").string() + " --reps " +
                              (dir.path() / "reps").string() + " --metric map",
                          dir.path());
  REQUIRE(r.status == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j.at("per_class").at("a").get<double>() == doctest::Approx(5.0 / 6).epsilon(1e-9));
  CHECK(j.at("per_class").at("b").get<double>() == doctest::Approx(5.0 / 6).epsilon(1e-9));
  CHECK(j.at("value").get<double>() == doctest::Approx(5.0 / 6).epsilon(1e-9));
  CHECK(j.at("warnings").size() >= 1);
}
