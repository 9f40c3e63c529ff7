#include "lstmf/lstmf.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>
#include <vector>

#include "lstmf/config.hpp"
#include "lstmf/error.hpp"
#include "lstmf/pipeline.hpp"

struct lstmf_config {
  lstmf::PipelineConfig cfg;
};

struct lstmf_encoder {
  lstmf::FisherEncoder enc;
};

struct lstmf_model {
  lstmf::SvmModel model;
};

namespace {

thread_local std::string g_last_error;

lstmf_status set_error(lstmf_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <class F>
lstmf_status guard(F&& f) {
  try {
    f();
    g_last_error.clear();
    return LSTMF_OK;
  } catch (const lstmf::Error& e) {
    return set_error(static_cast<lstmf_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(LSTMF_ERR_GENERIC, "out of memory");
  } catch (const std::exception& e) {
    return set_error(LSTMF_ERR_GENERIC, e.what());
  } catch (...) {
    return set_error(LSTMF_ERR_GENERIC, "unknown error");
  }
}

#define LSTMF_REQUIRE(cond, what) \
  if (!(cond)) return set_error(LSTMF_ERR_INVALID_ARGUMENT, what)

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

std::vector<std::filesystem::path> paths(const char* const* items, std::size_t n) {
  std::vector<std::filesystem::path> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!items[i]) lstmf::fail(lstmf::ErrorCode::kInvalidArgument, "null path");
    out.push_back(std::filesystem::u8path(items[i]));
  }
  return out;
}

lstmf::PoolMode to_mode(lstmf_pool_mode m) {
  switch (m) {
    case LSTMF_POOL_JOINT:
      return lstmf::PoolMode::kJoint;
    case LSTMF_POOL_CONCAT:
      return lstmf::PoolMode::kConcat;
  }
  lstmf::fail(lstmf::ErrorCode::kInvalidArgument, "unknown pool mode");
}

}  // namespace

extern "C" {

const char* lstmf_version(void) { return "0.1.0"; }

const char* lstmf_last_error(void) { return g_last_error.c_str(); }

void lstmf_free_string(char* s) { std::free(s); }

lstmf_status lstmf_config_create(lstmf_config** out) {
  LSTMF_REQUIRE(out, "null output");
  return guard([&] { *out = new lstmf_config{}; });
}

lstmf_status lstmf_config_load(const char* path, lstmf_config** out) {
  LSTMF_REQUIRE(path && out, "null argument");
  return guard([&] {
    auto cfg = lstmf::PipelineConfig::load(std::filesystem::u8path(path));
    cfg.validate();
    *out = new lstmf_config{std::move(cfg)};
  });
}

lstmf_status lstmf_config_parse(const char* json, lstmf_config** out) {
  LSTMF_REQUIRE(json && out, "null argument");
  return guard([&] {
    lstmf::Json j;
    try {
      j = lstmf::Json::parse(json);
    } catch (const lstmf::Json::exception& e) {
      lstmf::fail(lstmf::ErrorCode::kConfig, std::string("config is not valid JSON: ") + e.what());
    }
    auto cfg = lstmf::PipelineConfig::from_json(j);
    cfg.validate();
    *out = new lstmf_config{std::move(cfg)};
  });
}

void lstmf_config_destroy(lstmf_config* cfg) { delete cfg; }

lstmf_status lstmf_config_set_lengths(lstmf_config* cfg, const int* lengths, size_t n) {
  LSTMF_REQUIRE(cfg && (lengths || n == 0), "null argument");
  return guard([&] {
    lstmf::PipelineConfig next = cfg->cfg;
    next.tracker.lengths.assign(lengths, lengths + n);
    next.encoder.lengths = next.tracker.lengths;
    next.validate();
    cfg->cfg = std::move(next);
  });
}

lstmf_status lstmf_config_set_encoder_lengths(lstmf_config* cfg, const int* lengths, size_t n) {
  LSTMF_REQUIRE(cfg && (lengths || n == 0), "null argument");
  return guard([&] {
    lstmf::PipelineConfig next = cfg->cfg;
    next.encoder.lengths.assign(lengths, lengths + n);
    next.validate();
    cfg->cfg = std::move(next);
  });
}

lstmf_status lstmf_config_set_mode(lstmf_config* cfg, lstmf_pool_mode mode) {
  LSTMF_REQUIRE(cfg, "null config");
  return guard([&] { cfg->cfg.encoder.mode = to_mode(mode); });
}

lstmf_status lstmf_config_set_seed(lstmf_config* cfg, uint64_t seed) {
  LSTMF_REQUIRE(cfg, "null config");
  cfg->cfg.seed = seed;
  return LSTMF_OK;
}

lstmf_status lstmf_config_set_jobs(lstmf_config* cfg, int jobs) {
  LSTMF_REQUIRE(cfg, "null config");
  if (jobs < 1) return set_error(LSTMF_ERR_CONFIG, "jobs must be at least 1");
  cfg->cfg.jobs = jobs;
  return LSTMF_OK;
}

lstmf_status lstmf_config_set_stabilize(lstmf_config* cfg, int enabled) {
  LSTMF_REQUIRE(cfg, "null config");
  cfg->cfg.stabilize = enabled != 0;
  return LSTMF_OK;
}

lstmf_status lstmf_config_set_svm_c(lstmf_config* cfg, double c) {
  LSTMF_REQUIRE(cfg, "null config");
  if (!(c > 0)) return set_error(LSTMF_ERR_CONFIG, "svm c must be positive");
  cfg->cfg.svm.c = c;
  return LSTMF_OK;
}

lstmf_status lstmf_config_set_gaussians(lstmf_config* cfg, int k) {
  LSTMF_REQUIRE(cfg, "null config");
  if (k < 1) return set_error(LSTMF_ERR_CONFIG, "gaussians must be positive");
  cfg->cfg.encoder.gaussians = k;
  return LSTMF_OK;
}

lstmf_status lstmf_config_set_sample_budget(lstmf_config* cfg, uint64_t budget) {
  LSTMF_REQUIRE(cfg, "null config");
  if (budget < 1) return set_error(LSTMF_ERR_CONFIG, "sample budget must be positive");
  cfg->cfg.encoder.sample_budget = static_cast<std::size_t>(budget);
  return LSTMF_OK;
}

lstmf_status lstmf_config_set_pooled_accuracy(lstmf_config* cfg, int pooled) {
  LSTMF_REQUIRE(cfg, "null config");
  cfg->cfg.accuracy_averaging =
      pooled ? lstmf::AccuracyAveraging::kPooled : lstmf::AccuracyAveraging::kFoldsThenClasses;
  return LSTMF_OK;
}

lstmf_status lstmf_config_validate(const lstmf_config* cfg) {
  LSTMF_REQUIRE(cfg, "null config");
  return guard([&] { cfg->cfg.validate(); });
}

lstmf_status lstmf_config_to_json(const lstmf_config* cfg, char** out) {
  LSTMF_REQUIRE(cfg && out, "null argument");
  return guard([&] { *out = copy_string(lstmf::dump_json(cfg->cfg.to_json())); });
}

lstmf_status lstmf_config_hash(const lstmf_config* cfg, uint64_t* extraction, uint64_t* full) {
  LSTMF_REQUIRE(cfg, "null config");
  return guard([&] {
    if (extraction) *extraction = cfg->cfg.extraction_hash();
    if (full) *full = cfg->cfg.hash();
  });
}

lstmf_status lstmf_extract(const lstmf_config* cfg, const char* const* inputs, const char* const* outputs, size_t n,
                           char** summary_json) {
  LSTMF_REQUIRE(cfg && (n == 0 || (inputs && outputs)), "null argument");
  return guard([&] {
    cfg->cfg.validate();
    const auto in = paths(inputs, n);
    const auto out = paths(outputs, n);
    std::vector<lstmf::ExtractionSummary> summaries(n);
    lstmf::parallel_for(n, cfg->cfg.jobs,
                        [&](std::size_t i) { summaries[i] = lstmf::extract_file(in[i], out[i], cfg->cfg); });
    if (summary_json) {
      lstmf::Json arr = lstmf::Json::array();
      for (const auto& s : summaries) {
        lstmf::Json blocks = lstmf::Json::object();
        for (const auto& [l, c] : s.blocks) blocks[std::to_string(l)] = c;
        arr.push_back({{"video_id", s.video_id},
                       {"frames", s.frames},
                       {"scales", s.scales},
                       {"blocks", blocks},
                       {"records", s.records()},
                       {"rejected_static", s.rejected_static},
                       {"rejected_drift", s.rejected_drift},
                       {"stabilization_fallbacks", s.stabilization_fallbacks},
                       {"summary", s.summary_line()},
                       {"warnings", s.warnings}});
      }
      *summary_json = copy_string(lstmf::dump_json(arr));
    }
  });
}

lstmf_status lstmf_fit_encoder(const lstmf_config* cfg, const char* const* feature_files, size_t n,
                               const char* output_path) {
  LSTMF_REQUIRE(cfg && output_path && (n == 0 || feature_files), "null argument");
  return guard([&] {
    const auto files = paths(feature_files, n);
    const lstmf::FisherEncoder enc = lstmf::fit_encoder(files, cfg->cfg);
    lstmf::save_encoder(std::filesystem::u8path(output_path), enc);
  });
}

lstmf_status lstmf_encoder_load(const char* path, lstmf_encoder** out) {
  LSTMF_REQUIRE(path && out, "null argument");
  return guard([&] { *out = new lstmf_encoder{lstmf::load_encoder(std::filesystem::u8path(path))}; });
}

void lstmf_encoder_destroy(lstmf_encoder* enc) { delete enc; }

lstmf_status lstmf_encoder_info(const lstmf_encoder* enc, lstmf_pool_mode* mode, int* gaussians,
                                uint64_t* feature_config_hash) {
  LSTMF_REQUIRE(enc, "null encoder");
  if (mode) *mode = enc->enc.mode == lstmf::PoolMode::kConcat ? LSTMF_POOL_CONCAT : LSTMF_POOL_JOINT;
  if (gaussians) *gaussians = enc->enc.gaussians();
  if (feature_config_hash) *feature_config_hash = enc->enc.feature_config_hash;
  return LSTMF_OK;
}

lstmf_status lstmf_encoder_lengths(const lstmf_encoder* enc, int* lengths, size_t* n) {
  LSTMF_REQUIRE(enc && n, "null argument");
  const auto& ls = enc->enc.lengths;
  if (lengths) {
    if (*n < ls.size()) return set_error(LSTMF_ERR_INVALID_ARGUMENT, "length buffer too small");
    std::copy(ls.begin(), ls.end(), lengths);
  }
  *n = ls.size();
  return LSTMF_OK;
}

lstmf_status lstmf_encoder_dimension(const lstmf_encoder* enc, lstmf_pool_mode mode, size_t num_lengths,
                                     size_t* dim) {
  LSTMF_REQUIRE(enc && dim, "null argument");
  return guard([&] { *dim = enc->enc.dimension(to_mode(mode), num_lengths); });
}

lstmf_status lstmf_encode_file(const lstmf_encoder* enc, const char* feature_file, lstmf_pool_mode mode,
                               const int* lengths, size_t num_lengths, double* out, size_t cap, size_t* dim) {
  LSTMF_REQUIRE(enc && feature_file && (lengths || num_lengths == 0), "null argument");
  return guard([&] {
    const std::vector<int> ls(lengths, lengths + num_lengths);
    const lstmf::VideoRepresentation rep =
        lstmf::encode_features(std::filesystem::u8path(feature_file), enc->enc, to_mode(mode), ls);
    if (dim) *dim = rep.values.size();
    if (out) {
      if (cap < rep.values.size()) lstmf::fail(lstmf::ErrorCode::kInvalidArgument, "output buffer too small");
      std::copy(rep.values.begin(), rep.values.end(), out);
    }
  });
}

lstmf_status lstmf_encode(const lstmf_encoder* enc, const char* const* feature_files, size_t n, lstmf_pool_mode mode,
                          const int* lengths, size_t num_lengths, const char* output_dir, int jobs) {
  LSTMF_REQUIRE(enc && output_dir && (n == 0 || feature_files) && (lengths || num_lengths == 0), "null argument");
  return guard([&] {
    const std::vector<int> ls(lengths, lengths + num_lengths);
    lstmf::encode_files(paths(feature_files, n), enc->enc, to_mode(mode), ls, std::filesystem::u8path(output_dir),
                        jobs);
  });
}

lstmf_status lstmf_train(const lstmf_config* cfg, const char* manifest_path, const char* rep_dir,
                         const char* model_path) {
  LSTMF_REQUIRE(cfg && manifest_path && model_path, "null argument");
  return guard([&] {
    const auto manifest = lstmf::load_manifest(std::filesystem::u8path(manifest_path));
    const auto model =
        lstmf::train_from_manifest(manifest, rep_dir ? std::filesystem::u8path(rep_dir) : std::filesystem::path{},
                                   cfg->cfg);
    lstmf::save_model(std::filesystem::u8path(model_path), model);
  });
}

lstmf_status lstmf_evaluate(const lstmf_config* cfg, const char* manifest_path, const char* rep_dir,
                            const char* protocol, const char* metric, const char* report_path, char** report_json) {
  LSTMF_REQUIRE(cfg && manifest_path && protocol && metric, "null argument");
  return guard([&] {
    const auto p = lstmf::parse_protocol(protocol);
    const auto m = lstmf::parse_metric(metric);
    const auto manifest = lstmf::load_manifest(std::filesystem::u8path(manifest_path));
    const lstmf::Json report = lstmf::evaluate_manifest(
        manifest, rep_dir ? std::filesystem::u8path(rep_dir) : std::filesystem::path{}, cfg->cfg, p, m);
    const std::string text = lstmf::dump_json(report);
    if (report_path) lstmf::write_text_file(std::filesystem::u8path(report_path), text);
    if (report_json) *report_json = copy_string(text);
  });
}

lstmf_status lstmf_model_load(const char* path, lstmf_model** out) {
  LSTMF_REQUIRE(path && out, "null argument");
  return guard([&] { *out = new lstmf_model{lstmf::load_model(std::filesystem::u8path(path))}; });
}

void lstmf_model_destroy(lstmf_model* model) { delete model; }

size_t lstmf_model_num_classes(const lstmf_model* model) { return model ? model->model.labels.size() : 0; }

size_t lstmf_model_dimension(const lstmf_model* model) { return model ? model->model.dim() : 0; }

const char* lstmf_model_class_label(const lstmf_model* model, size_t i) {
  if (!model || i >= model->model.labels.size()) return nullptr;
  return model->model.labels[i].c_str();
}

lstmf_status lstmf_model_scores(const lstmf_model* model, const double* x, size_t dim, double* out) {
  LSTMF_REQUIRE(model && x && out, "null argument");
  if (dim != model->model.dim()) return set_error(LSTMF_ERR_INVALID_ARGUMENT, "dimension does not match the model");
  return guard([&] {
    const auto s = model->model.scores(std::span<const double>(x, dim));
    std::copy(s.begin(), s.end(), out);
  });
}

}  // extern "C"
