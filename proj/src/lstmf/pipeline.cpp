#include "lstmf/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "lstmf/error.hpp"
#include "lstmf/random.hpp"

namespace lstmf {

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_at = n;
  std::exception_ptr error;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (i < failed_at) {
            failed_at = i;
            error = std::current_exception();
          }
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------- extract

std::size_t ExtractionSummary::records() const {
  std::size_t n = 0;
  for (const auto& [l, c] : blocks) n += c;
  return n;
}

std::string ExtractionSummary::summary_line() const {
  std::ostringstream ss;
  ss << video_id << ": frames=" << frames << " scales=" << scales << " blocks";
  for (const auto& [l, c] : blocks) ss << " l" << l << "=" << c;
  ss << " rejected_static=" << rejected_static << " rejected_drift=" << rejected_drift;
  return ss.str();
}

ExtractionSummary extract_descriptors(const FrameSequence& seq, const PipelineConfig& cfg,
                                      const DescriptorSink& sink) {
  cfg.validate();
  ExtractionSummary summary;
  summary.frames = seq.frames.size();
  for (int l : cfg.tracker.lengths) summary.blocks[l] = 0;

  if (seq.frames.size() < static_cast<std::size_t>(cfg.tracker.min_length()) + 1) {
    summary.warnings.push_back("video has " + std::to_string(seq.frames.size()) +
                               " frames, fewer than the shortest block needs; no features");
    return summary;
  }

  Pyramid prev = build_pyramid(seq.frames[0], cfg.pyramid.scale_factor, cfg.pyramid.max_levels);
  const int scales = static_cast<int>(prev.levels.size());
  summary.scales = scales;

  std::vector<Tracker> trackers;
  std::vector<std::unordered_map<std::uint64_t, CellHistogramCache>> caches(static_cast<std::size_t>(scales));
  for (int s = 0; s < scales; ++s) {
    trackers.emplace_back(cfg.tracker, s);
    trackers.back().start(prev.levels[static_cast<std::size_t>(s)]);
  }

  for (std::size_t t = 1; t < seq.frames.size(); ++t) {
    Pyramid cur = build_pyramid(seq.frames[t], cfg.pyramid.scale_factor, cfg.pyramid.max_levels);
    for (int s = 0; s < scales; ++s) {
      const auto si = static_cast<std::size_t>(s);
      const GrayFrame& a = prev.levels[si];
      const GrayFrame& b = cur.levels[si];
      Tracker& tracker = trackers[si];
      auto& cache = caches[si];

      FlowField flow = estimate_flow(a, b, cfg.flow);
      FlowField stabilized;
      if (cfg.stabilize) {
        Rng rng(derive_seed(cfg.seed, "ransac", (static_cast<std::uint64_t>(t) << 8) | si));
        const HomographyEstimate est = estimate_homography(a, b, flow, cfg.ransac, rng);
        if (est.fallback) ++summary.stabilization_fallbacks;
        stabilized = stabilize_flow(flow, est.homography);
      }
      const FlowField& desc_flow = cfg.stabilize ? stabilized : flow;
      const FlowField& track_flow = cfg.stabilize && cfg.stabilize_tracking ? stabilized : flow;

      std::optional<FrameHistograms> maps;
      if (!tracker.active().empty()) maps.emplace(a, desc_flow, cfg.descriptor);
      const auto observer = [&](const TrackedPath& path) {
        const TrackPoint& p = path.points.back();
        cache[path.id].append(*maps, p.x, p.y, cfg.descriptor.patch_size);
      };

      const std::vector<TrajectoryBlock> blocks = tracker.advance(b, track_flow, observer);
      const double to_full = std::pow(cfg.pyramid.scale_factor, s);
      for (const TrajectoryBlock& block : blocks) {
        switch (validate_block(block, cfg.tracker)) {
          case BlockVerdict::kRejectStatic:
            ++summary.rejected_static;
            continue;
          case BlockVerdict::kRejectDrift:
            ++summary.rejected_drift;
            continue;
          case BlockVerdict::kAccept:
            break;
        }
        auto it = cache.find(block.path_id);
        if (it == cache.end()) fail(ErrorCode::kGeneric, "internal: missing histogram cache for a block");
        sink(describe_block(block, it->second, to_full));
        ++summary.blocks[block.length];
      }

      std::unordered_set<std::uint64_t> live;
      for (const TrackedPath& p : tracker.active()) live.insert(p.id);
      for (auto it = cache.begin(); it != cache.end();) it = live.count(it->first) ? std::next(it) : cache.erase(it);
    }
    prev = std::move(cur);
  }

  if (summary.records() == 0) summary.warnings.push_back("no trajectory blocks survived; no features");
  return summary;
}

std::string default_video_id(const std::filesystem::path& input) {
  auto p = input;
  if (p.has_filename() == false) p = p.parent_path();
  return p.stem().string();
}

ExtractionSummary extract_file(const std::filesystem::path& input, const std::filesystem::path& output,
                               const PipelineConfig& cfg, const std::string& video_id) {
  cfg.validate();
  const FrameSequence seq = load_frame_sequence(input);
  FeatureHeader header{cfg.extraction_hash(), video_id.empty() ? default_video_id(input) : video_id};
  FeatureWriter writer(output, header);
  ExtractionSummary summary = extract_descriptors(seq, cfg, [&](const DescriptorSet& d) { writer.write(d); });
  writer.close();
  summary.video_id = header.video_id;
  return summary;
}

// ---------------------------------------------------------------- encoder

FisherEncoder fit_encoder(std::span<const std::filesystem::path> files, const PipelineConfig& cfg,
                          EncoderFitSummary* summary) {
  cfg.validate();
  if (files.empty()) fail(ErrorCode::kInsufficientData, "no feature files given");
  // Every file must come from the same extraction settings.
  const std::uint64_t expected = read_feature_header(files[0]).config_hash;
  for (const auto& f : files) {
    const FeatureHeader h = read_feature_header(f);
    if (h.config_hash != expected)
      fail(ErrorCode::kConfigHashMismatch, f.string() + ": feature config hash " + hash_to_hex(h.config_hash) +
                                               " differs from " + files[0].string() + " (" + hash_to_hex(expected) +
                                               ")");
  }
  const std::size_t budget = cfg.encoder.sample_budget;
  const std::size_t need = 10 * static_cast<std::size_t>(cfg.encoder.gaussians);
  if (budget < need)
    fail(ErrorCode::kConfig, "encoder.sample_budget must be at least 10 x gaussians (" + std::to_string(need) + ")");

  const std::set<int> lengths(cfg.encoder.lengths.begin(), cfg.encoder.lengths.end());
  std::vector<std::array<float, kRecordValues>> reservoir;
  Rng rng(derive_seed(cfg.seed, "reservoir"));
  std::size_t seen = 0;
  std::set<int> observed;
  for (const auto& f : files) {
    FeatureReader reader(f);
    std::array<float, kRecordValues> r;
    while (reader.next(r)) {
      if (!lengths.count(static_cast<int>(r[0]))) continue;
      observed.insert(static_cast<int>(r[0]));
      if (reservoir.size() < budget) {
        reservoir.push_back(r);
      } else {
        const std::size_t j = rng.index(seen + 1);
        if (j < budget) reservoir[j] = r;
      }
      ++seen;
    }
  }
  if (seen < need)
    fail(ErrorCode::kInsufficientData, "only " + std::to_string(seen) + " descriptors at the encoder lengths; need " +
                                           std::to_string(need));

  FisherEncoder enc;
  enc.mode = cfg.encoder.mode;
  // Lengths absent from every file were not extracted; the encoder does not
  // claim them.
  for (int l : cfg.encoder.lengths) {
    if (observed.count(l))
      enc.lengths.push_back(l);
    else if (summary)
      summary->dropped_lengths.push_back(l);
  }
  enc.feature_config_hash = expected;
  GmmOptions opt;
  opt.max_iterations = cfg.encoder.max_em_iterations;
  opt.tolerance = cfg.encoder.em_tolerance;
  opt.threads = cfg.jobs;

  std::size_t offset = kRecordMeta;
  for (int t = 0; t < kDescriptorTypes; ++t) {
    const int d = kDescriptorTypeDims[static_cast<std::size_t>(t)];
    SampleMatrix x(static_cast<Eigen::Index>(reservoir.size()), d);
    for (std::size_t i = 0; i < reservoir.size(); ++i)
      for (int k = 0; k < d; ++k) x(static_cast<Eigen::Index>(i), k) = reservoir[i][offset + static_cast<std::size_t>(k)];
    offset += static_cast<std::size_t>(d);

    TypeEncoder& te = enc.types[static_cast<std::size_t>(t)];
    te.pca = fit_pca(x);
    GmmFit fit = fit_gmm(te.pca.project(x), cfg.encoder.gaussians, derive_seed(cfg.seed, "gmm", static_cast<std::uint64_t>(t)), opt);
    te.gmm = fit.model;
    if (summary) summary->fits[static_cast<std::size_t>(t)] = std::move(fit);
  }
  if (summary) {
    summary->available = seen;
    summary->sampled = reservoir.size();
  }
  return enc;
}

VideoRepresentation encode_features(const std::filesystem::path& feature_file, const FisherEncoder& encoder,
                                    PoolMode mode, std::span<const int> lengths) {
  FeatureReader reader(feature_file);
  if (reader.header().config_hash != encoder.feature_config_hash)
    fail(ErrorCode::kConfigHashMismatch, feature_file.string() + ": feature config hash " +
                                             hash_to_hex(reader.header().config_hash) + " does not match the encoder (" +
                                             hash_to_hex(encoder.feature_config_hash) + ")");
  if (lengths.empty()) fail(ErrorCode::kLengthMismatch, "no lengths requested");
  for (int l : lengths)
    if (std::find(encoder.lengths.begin(), encoder.lengths.end(), l) == encoder.lengths.end())
      fail(ErrorCode::kLengthMismatch, "length " + std::to_string(l) + " is not covered by the encoder");

  const std::set<int> wanted(lengths.begin(), lengths.end());
  DescriptorsByLength by_length;
  DescriptorSet d;
  while (reader.next(d))
    if (wanted.count(d.length)) by_length[d.length].push_back(std::move(d));
  VideoRepresentation rep = lstmf_pool(by_length, encoder, mode, lengths);
  rep.video_id = reader.header().video_id;
  return rep;
}

std::vector<std::filesystem::path> encode_files(std::span<const std::filesystem::path> files,
                                                const FisherEncoder& encoder, PoolMode mode,
                                                std::span<const int> lengths,
                                                const std::filesystem::path& output_dir, int jobs) {
  // Validate every header before any encoding work.
  std::vector<std::string> ids;
  std::set<std::string> unique;
  for (const auto& f : files) {
    const FeatureHeader h = read_feature_header(f);
    if (h.config_hash != encoder.feature_config_hash)
      fail(ErrorCode::kConfigHashMismatch, f.string() + ": feature config hash " + hash_to_hex(h.config_hash) +
                                               " does not match the encoder (" +
                                               hash_to_hex(encoder.feature_config_hash) + ")");
    if (!unique.insert(h.video_id).second) fail(ErrorCode::kInvalidArgument, "duplicate video id '" + h.video_id + "'");
    ids.push_back(h.video_id);
  }
  for (int l : lengths)
    if (std::find(encoder.lengths.begin(), encoder.lengths.end(), l) == encoder.lengths.end())
      fail(ErrorCode::kLengthMismatch, "length " + std::to_string(l) + " is not covered by the encoder");

  std::error_code ec;
  std::filesystem::create_directories(output_dir, ec);
  if (ec) fail(ErrorCode::kInput, "cannot create " + output_dir.string());
  std::vector<std::filesystem::path> out(files.size());
  for (std::size_t i = 0; i < files.size(); ++i) out[i] = output_dir / (ids[i] + ".lrep");
  parallel_for(files.size(), jobs, [&](std::size_t i) {
    const VideoRepresentation rep = encode_features(files[i], encoder, mode, lengths);
    write_representation(out[i], rep, encoder.feature_config_hash);
  });
  return out;
}

// ---------------------------------------------------------------- learn

std::filesystem::path representation_path(const DatasetManifest& manifest, const ManifestEntry& entry,
                                          const std::filesystem::path& rep_dir) {
  if (!rep_dir.empty()) return rep_dir / (entry.id + ".lrep");
  std::filesystem::path p = std::filesystem::u8path(entry.path);
  if (p.is_relative()) p = manifest.base_dir / p;
  return p;
}

LoadedRepresentations load_representations(const DatasetManifest& manifest, const std::filesystem::path& rep_dir) {
  LoadedRepresentations out;
  if (manifest.entries.empty()) fail(ErrorCode::kManifestMismatch, "manifest has no entries");
  std::vector<VideoRepresentation> reps(manifest.entries.size());
  std::vector<std::uint64_t> hashes(manifest.entries.size());
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto path = representation_path(manifest, manifest.entries[i], rep_dir);
    if (!std::filesystem::exists(path))
      fail(ErrorCode::kManifestMismatch, "no representation for '" + manifest.entries[i].id + "' at " + path.string());
    reps[i] = read_representation(path, &hashes[i]);
    if (reps[i].video_id != manifest.entries[i].id)
      fail(ErrorCode::kManifestMismatch, path.string() + " holds video '" + reps[i].video_id + "', expected '" +
                                             manifest.entries[i].id + "'");
    if (hashes[i] != hashes[0] || reps[i].values.size() != reps[0].values.size() || reps[i].mode != reps[0].mode ||
        reps[i].lengths != reps[0].lengths)
      fail(ErrorCode::kManifestMismatch, path.string() + " is inconsistent with " + manifest.entries[0].id);
    if (reps[i].empty) out.warnings.push_back("video '" + reps[i].video_id + "' has no descriptors");
  }
  out.config_hash = hashes[0];
  out.x.resize(static_cast<Eigen::Index>(reps.size()), static_cast<Eigen::Index>(reps[0].values.size()));
  for (std::size_t i = 0; i < reps.size(); ++i)
    for (std::size_t k = 0; k < reps[i].values.size(); ++k)
      out.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = reps[i].values[k];
  return out;
}

namespace {

SampleMatrix select_rows(const SampleMatrix& x, const std::vector<std::size_t>& rows) {
  SampleMatrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

std::vector<std::vector<std::string>> select_labels(const DatasetManifest& m, const std::vector<std::size_t>& rows) {
  std::vector<std::vector<std::string>> out;
  for (std::size_t i : rows) out.push_back(m.entries[i].labels);
  return out;
}

std::vector<std::size_t> split_rows(const DatasetManifest& m, const std::string& split) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < m.entries.size(); ++i)
    if (m.entries[i].split == split) rows.push_back(i);
  return rows;
}

Json class_json(const std::map<std::string, double>& m) {
  Json j = Json::object();
  for (const auto& [k, v] : m) j[k] = v;
  return j;
}

}  // namespace

SvmModel train_from_manifest(const DatasetManifest& manifest, const std::filesystem::path& rep_dir,
                             const PipelineConfig& cfg) {
  cfg.validate();
  const LoadedRepresentations reps = load_representations(manifest, rep_dir);
  std::vector<std::size_t> rows = split_rows(manifest, "train");
  const bool any_split = std::any_of(manifest.entries.begin(), manifest.entries.end(),
                                     [](const ManifestEntry& e) { return !e.split.empty(); });
  if (!any_split) {
    rows.resize(manifest.entries.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  }
  if (rows.empty()) fail(ErrorCode::kManifestMismatch, "manifest has no training entries");
  try {
    return train_ova(select_rows(reps.x, rows), select_labels(manifest, rows), cfg.svm, derive_seed(cfg.seed, "svm"),
                     cfg.jobs);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidArgument) fail(ErrorCode::kManifestMismatch, e.what());
    throw;
  }
}

Protocol parse_protocol(const std::string& name) {
  if (name == "split") return Protocol::kSplit;
  if (name == "logo") return Protocol::kLogo;
  fail(ErrorCode::kInvalidArgument, "unknown protocol '" + name + "' (split|logo)");
}

Metric parse_metric(const std::string& name) {
  if (name == "macc") return Metric::kMacc;
  if (name == "map") return Metric::kMap;
  fail(ErrorCode::kInvalidArgument, "unknown metric '" + name + "' (macc|map)");
}

Json evaluate_manifest(const DatasetManifest& manifest, const std::filesystem::path& rep_dir,
                       const PipelineConfig& cfg, Protocol protocol, Metric metric) {
  cfg.validate();
  const std::vector<std::string> classes = manifest.classes();
  if (metric == Metric::kMacc)
    for (const auto& e : manifest.entries)
      if (e.labels.size() != 1)
        fail(ErrorCode::kManifestMismatch, "macc needs exactly one label per entry; '" + e.id + "' has " +
                                               std::to_string(e.labels.size()));

  std::vector<Fold> folds;
  if (protocol == Protocol::kSplit) {
    Fold f;
    f.group = "split";
    f.train = split_rows(manifest, "train");
    f.test = split_rows(manifest, "test");
    if (f.train.empty() || f.test.empty())
      fail(ErrorCode::kManifestMismatch, "split protocol needs entries with split 'train' and 'test'");
    folds.push_back(std::move(f));
  } else {
    folds = leave_one_group_out(manifest);
  }
  const LoadedRepresentations reps = load_representations(manifest, rep_dir);

  Json report;
  report["metric"] = metric == Metric::kMacc ? "macc" : "map";
  report["protocol"] = protocol == Protocol::kSplit ? "split" : "logo";
  Json warnings = Json::array();
  for (const auto& w : reps.warnings) warnings.push_back(w);

  std::map<std::string, std::vector<double>> class_values;  // over folds
  std::vector<std::string> pooled_pred, pooled_truth;
  Json per_fold = Json::array();

  for (std::size_t fi = 0; fi < folds.size(); ++fi) {
    const Fold& fold = folds[fi];
    SvmModel model;
    try {
      model = train_ova(select_rows(reps.x, fold.train), select_labels(manifest, fold.train), cfg.svm,
                        derive_seed(cfg.seed, "svm", fi), cfg.jobs);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kInvalidArgument)
        fail(ErrorCode::kManifestMismatch, "fold '" + fold.group + "': " + e.what());
      throw;
    }
    std::vector<std::vector<double>> scores;
    std::vector<std::string> pred, truth;
    std::vector<std::vector<std::string>> labels;
    for (std::size_t i : fold.test) {
      const auto row = reps.x.row(static_cast<Eigen::Index>(i));
      const std::vector<double> x(row.data(), row.data() + row.size());
      const std::vector<double> s = model.scores(x);
      // Scores aligned with the manifest classes; unseen classes never win.
      std::vector<double> aligned(classes.size(), -std::numeric_limits<double>::infinity());
      for (std::size_t c = 0; c < model.labels.size(); ++c) {
        const auto pos = std::find(classes.begin(), classes.end(), model.labels[c]) - classes.begin();
        aligned[static_cast<std::size_t>(pos)] = s[c];
      }
      scores.push_back(std::move(aligned));
      pred.push_back(model.predict(x));
      labels.push_back(manifest.entries[i].labels);
      if (metric == Metric::kMacc) truth.push_back(manifest.entries[i].labels.front());
    }
    MetricResult r;
    if (metric == Metric::kMacc) {
      r = mean_accuracy(pred, truth, classes);
      pooled_pred.insert(pooled_pred.end(), pred.begin(), pred.end());
      pooled_truth.insert(pooled_truth.end(), truth.begin(), truth.end());
    } else {
      for (const auto& c : classes)
        if (std::find(model.labels.begin(), model.labels.end(), c) == model.labels.end())
          r.warnings.push_back("class '" + c + "' absent from training fold '" + fold.group + "'");
      MetricResult m = mean_average_precision(scores, labels, classes);
      r.value = m.value;
      r.per_class = m.per_class;
      r.warnings.insert(r.warnings.end(), m.warnings.begin(), m.warnings.end());
    }
    for (const auto& [c, v] : r.per_class) class_values[c].push_back(v);
    for (const auto& w : r.warnings) warnings.push_back("fold '" + fold.group + "': " + w);
    Json fj;
    fj["group"] = fold.group;
    fj["train_count"] = fold.train.size();
    fj["test_count"] = fold.test.size();
    fj["value"] = std::isfinite(r.value) ? Json(r.value) : Json(nullptr);
    fj["per_class"] = class_json(r.per_class);
    per_fold.push_back(fj);
  }

  std::map<std::string, double> per_class;
  double value = std::numeric_limits<double>::quiet_NaN();
  if (metric == Metric::kMacc && cfg.accuracy_averaging == AccuracyAveraging::kPooled) {
    const MetricResult r = mean_accuracy(pooled_pred, pooled_truth, classes);
    per_class = r.per_class;
    value = r.value;
    report["averaging"] = "pooled";
  } else {
    double sum = 0;
    for (const auto& [c, vs] : class_values) {
      double s = 0;
      for (double v : vs) s += v;
      per_class[c] = s / static_cast<double>(vs.size());
      sum += per_class[c];
    }
    if (!per_class.empty()) value = sum / static_cast<double>(per_class.size());
    report["averaging"] = "folds_then_classes";
  }
  report["value"] = std::isfinite(value) ? Json(value) : Json(nullptr);
  report["per_class"] = class_json(per_class);
  report["per_fold"] = per_fold;
  report["config_hash"] = hash_to_hex(cfg.hash());
  report["feature_config_hash"] = hash_to_hex(reps.config_hash);
  report["warnings"] = warnings;
  return report;
}

}  // namespace lstmf
