// Command-line front end over the C API.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lstmf/lstmf.h"

namespace fs = std::filesystem;

namespace {

struct Failure {
  lstmf_status status;
  std::string message;
};

void check(lstmf_status s) {
  if (s != LSTMF_OK) throw Failure{s, lstmf_last_error()};
}

std::vector<int> parse_lengths(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Failure{LSTMF_ERR_CONFIG, "bad length list '" + text + "'"};
    }
  }
  if (out.empty()) throw Failure{LSTMF_ERR_CONFIG, "empty length list"};
  return out;
}

lstmf_pool_mode parse_mode(const std::string& m) {
  if (m == "joint") return LSTMF_POOL_JOINT;
  if (m == "concat") return LSTMF_POOL_CONCAT;
  throw Failure{LSTMF_ERR_INVALID_ARGUMENT, "unknown mode '" + m + "' (joint|concat)"};
}

std::vector<const char*> c_strs(const std::vector<std::string>& v) {
  std::vector<const char*> out;
  for (const auto& s : v) out.push_back(s.c_str());
  return out;
}

class Config {
 public:
  ~Config() { lstmf_config_destroy(cfg_); }
  lstmf_config* get() { return cfg_; }
  lstmf_config** out() { return &cfg_; }

 private:
  lstmf_config* cfg_ = nullptr;
};

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> lengths;
  std::optional<std::string> mode;
  std::optional<std::string> stabilize;
  std::optional<double> c;
  std::optional<int> gaussians;
  std::optional<std::uint64_t> budget;
  bool pooled_accuracy = false;
  std::string metric = "macc";
  std::string protocol = "split";
  std::vector<std::string> inputs;
  std::string output;
  std::string encoder;
  std::string manifest;
  std::string reps;
};

void load_config(const Options& o, Config& cfg) {
  if (o.config.empty())
    check(lstmf_config_create(cfg.out()));
  else
    check(lstmf_config_load(o.config.c_str(), cfg.out()));
  if (o.seed) check(lstmf_config_set_seed(cfg.get(), *o.seed));
  if (o.jobs) check(lstmf_config_set_jobs(cfg.get(), *o.jobs));
  if (o.stabilize) check(lstmf_config_set_stabilize(cfg.get(), *o.stabilize == "on"));
  if (o.c) check(lstmf_config_set_svm_c(cfg.get(), *o.c));
  if (o.gaussians) check(lstmf_config_set_gaussians(cfg.get(), *o.gaussians));
  if (o.budget) check(lstmf_config_set_sample_budget(cfg.get(), *o.budget));
  if (o.mode) check(lstmf_config_set_mode(cfg.get(), parse_mode(*o.mode)));
  if (o.pooled_accuracy) check(lstmf_config_set_pooled_accuracy(cfg.get(), 1));
}

void print_warnings(const nlohmann::json& summary) {
  for (const auto& w : summary.at("warnings"))
    std::cerr << "warning: " << summary.at("video_id").get<std::string>() << ": " << w.get<std::string>() << "\n";
}

int run_extract(const Options& o) {
  Config cfg;
  load_config(o, cfg);
  if (o.lengths) {
    const auto ls = parse_lengths(*o.lengths);
    check(lstmf_config_set_lengths(cfg.get(), ls.data(), ls.size()));
  }
  check(lstmf_config_validate(cfg.get()));
  std::vector<std::string> outputs;
  const fs::path out(o.output);
  const bool to_dir = o.inputs.size() > 1 || fs::is_directory(out) || o.output.back() == '/';
  if (to_dir) {
    fs::create_directories(out);
    for (const auto& in : o.inputs) {
      fs::path p(in);
      if (!p.has_filename()) p = p.parent_path();
      outputs.push_back((out / (p.stem().string() + ".lstmf")).string());
    }
  } else {
    outputs.push_back(o.output);
  }
  char* summary = nullptr;
  const auto ins = c_strs(o.inputs);
  const auto outs = c_strs(outputs);
  check(lstmf_extract(cfg.get(), ins.data(), outs.data(), ins.size(), &summary));
  const auto j = nlohmann::json::parse(summary);
  lstmf_free_string(summary);
  for (const auto& s : j) {
    std::cout << s.at("summary").get<std::string>() << "\n";
    print_warnings(s);
  }
  return 0;
}

int run_fit_encoder(const Options& o) {
  Config cfg;
  load_config(o, cfg);
  if (o.lengths) {
    const auto ls = parse_lengths(*o.lengths);
    check(lstmf_config_set_encoder_lengths(cfg.get(), ls.data(), ls.size()));
  }
  const auto files = c_strs(o.inputs);
  check(lstmf_fit_encoder(cfg.get(), files.data(), files.size(), o.output.c_str()));
  lstmf_encoder* enc = nullptr;
  check(lstmf_encoder_load(o.output.c_str(), &enc));
  std::size_t n = 0;
  lstmf_encoder_lengths(enc, nullptr, &n);
  std::vector<int> lengths(n);
  const lstmf_status s = lstmf_encoder_lengths(enc, lengths.data(), &n);
  lstmf_encoder_destroy(enc);
  check(s);
  std::cout << "encoder written to " << o.output << " (lengths";
  for (std::size_t i = 0; i < n; ++i) std::cout << (i ? "," : " ") << lengths[i];
  std::cout << ")\n";
  return 0;
}

int run_encode(const Options& o) {
  Config cfg;
  load_config(o, cfg);
  lstmf_encoder* enc = nullptr;
  check(lstmf_encoder_load(o.encoder.c_str(), &enc));
  struct Drop {
    lstmf_encoder* e;
    ~Drop() { lstmf_encoder_destroy(e); }
  } drop{enc};

  lstmf_pool_mode mode;
  check(lstmf_encoder_info(enc, &mode, nullptr, nullptr));
  if (o.mode) mode = parse_mode(*o.mode);
  std::vector<int> lengths;
  if (o.lengths) {
    lengths = parse_lengths(*o.lengths);
  } else {
    std::size_t n = 0;
    check(lstmf_encoder_lengths(enc, nullptr, &n));
    lengths.resize(n);
    check(lstmf_encoder_lengths(enc, lengths.data(), &n));
  }
  int jobs = o.jobs.value_or(1);
  const auto files = c_strs(o.inputs);
  check(lstmf_encode(enc, files.data(), files.size(), mode, lengths.data(), lengths.size(), o.output.c_str(), jobs));
  std::size_t dim = 0;
  check(lstmf_encoder_dimension(enc, mode, lengths.size(), &dim));
  std::cout << files.size() << " representations of dimension " << dim << " written to " << o.output << "\n";
  return 0;
}

int run_train(const Options& o) {
  Config cfg;
  load_config(o, cfg);
  check(lstmf_train(cfg.get(), o.manifest.c_str(), o.reps.empty() ? nullptr : o.reps.c_str(), o.output.c_str()));
  std::cout << "model written to " << o.output << "\n";
  return 0;
}

int run_evaluate(const Options& o) {
  Config cfg;
  load_config(o, cfg);
  char* report = nullptr;
  check(lstmf_evaluate(cfg.get(), o.manifest.c_str(), o.reps.empty() ? nullptr : o.reps.c_str(), o.protocol.c_str(),
                       o.metric.c_str(), o.output.empty() ? nullptr : o.output.c_str(), &report));
  const auto j = nlohmann::json::parse(report);
  if (o.output.empty()) std::cout << report;
  lstmf_free_string(report);
  for (const auto& w : j.at("warnings")) std::cerr << "warning: " << w.get<std::string>() << "\n";
  if (!o.output.empty()) {
    std::cout << j.at("metric").get<std::string>() << " = ";
    if (j.at("value").is_null())
      std::cout << "undefined";
    else
      std::cout << j.at("value").get<double>();
    std::cout << " (" << j.at("protocol").get<std::string>() << ", " << j.at("per_fold").size() << " fold(s))\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-length trajectory features for action recognition"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", lstmf_version());

  Options o;
  app.add_option("--config", o.config, "Pipeline config JSON");
  app.add_option("--seed", o.seed, "Master seed");
  app.add_option("--jobs", o.jobs, "Files processed in parallel")->check(CLI::PositiveNumber);

  auto* extract = app.add_subcommand("extract", "Extract multi-length trajectory descriptors");
  extract->add_option("inputs", o.inputs, "Video files or frame directories")->required();
  extract->add_option("-o,--output", o.output, "Feature file, or directory for several inputs")->required();
  extract->add_option("--lengths", o.lengths, "Block lengths, e.g. 15,30,45");
  extract->add_option("--stabilize", o.stabilize, "Camera-motion compensation")->check(CLI::IsMember({"on", "off"}));

  auto* fit = app.add_subcommand("fit-encoder", "Fit PCA and GMM per descriptor type");
  fit->add_option("features", o.inputs, "Feature files")->required();
  fit->add_option("-o,--output", o.output, "Encoder JSON")->required();
  fit->add_option("--lengths", o.lengths, "Block lengths to sample descriptors from");
  fit->add_option("--mode", o.mode, "Default pooling mode")->check(CLI::IsMember({"joint", "concat"}));
  fit->add_option("--gaussians", o.gaussians, "GMM components");
  fit->add_option("--budget", o.budget, "Descriptor sample budget");

  auto* encode = app.add_subcommand("encode", "Pool Fisher vectors into video representations");
  encode->add_option("features", o.inputs, "Feature files")->required();
  encode->add_option("--encoder", o.encoder, "Encoder JSON")->required();
  encode->add_option("-o,--output", o.output, "Output directory")->required();
  encode->add_option("--lengths", o.lengths, "Lengths to pool (default: the encoder's)");
  encode->add_option("--mode", o.mode, "joint or concat (default: the encoder's)")
      ->check(CLI::IsMember({"joint", "concat"}));

  auto* train = app.add_subcommand("train", "Train one-vs-all linear SVMs");
  train->add_option("--manifest", o.manifest, "Dataset manifest (JSON lines)")->required();
  train->add_option("--reps", o.reps, "Representation directory");
  train->add_option("--c", o.c, "SVM regularization constant");
  train->add_option("-o,--output", o.output, "Model JSON")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Cross-validated evaluation");
  evaluate->add_option("--manifest", o.manifest, "Dataset manifest (JSON lines)")->required();
  evaluate->add_option("--reps", o.reps, "Representation directory");
  evaluate->add_option("--protocol", o.protocol, "split or logo")->check(CLI::IsMember({"split", "logo"}));
  evaluate->add_option("--metric", o.metric, "macc or map")->check(CLI::IsMember({"macc", "map"}));
  evaluate->add_option("--c", o.c, "SVM regularization constant");
  evaluate->add_flag("--pooled-accuracy", o.pooled_accuracy, "Pool predictions over folds before averaging");
  evaluate->add_option("-o,--output", o.output, "Report JSON (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return LSTMF_ERR_INVALID_ARGUMENT;
  }

  try {
    if (*extract) return run_extract(o);
    if (*fit) return run_fit_encoder(o);
    if (*encode) return run_encode(o);
    if (*train) return run_train(o);
    if (*evaluate) return run_evaluate(o);
  } catch (const Failure& f) {
    std::cerr << "lstmf: error: " << f.message << "\n";
    return f.status;
  } catch (const std::exception& e) {
    std::cerr << "lstmf: error: " << e.what() << "\n";
    return LSTMF_ERR_GENERIC;
  }
  return LSTMF_ERR_INVALID_ARGUMENT;
}
