#include "lstmf/encode.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <thread>

#include "lstmf/error.hpp"
#include "lstmf/random.hpp"

namespace lstmf {

// ---------------------------------------------------------------- PCA

Eigen::VectorXd PcaModel::project(std::span<const double> x) const {
  if (static_cast<Eigen::Index>(x.size()) != basis.rows())
    fail(ErrorCode::kInvalidArgument, "PCA input has wrong dimension");
  const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
  return basis.transpose() * (v - mean);
}

SampleMatrix PcaModel::project(const SampleMatrix& x) const {
  if (x.cols() != basis.rows()) fail(ErrorCode::kInvalidArgument, "PCA input has wrong dimension");
  return (x.rowwise() - mean.transpose()) * basis;
}

PcaModel fit_pca(const SampleMatrix& samples) {
  const Eigen::Index n = samples.rows(), d = samples.cols();
  if (d < 2) fail(ErrorCode::kInvalidArgument, "PCA needs at least two input dimensions");
  if (n < d) {
    std::ostringstream msg;
    msg << "PCA needs at least " << d << " samples, got " << n;
    fail(ErrorCode::kInsufficientData, msg.str());
  }
  const Eigen::Index keep = d / 2;

  PcaModel m;
  m.mean = samples.colwise().mean().transpose();
  const SampleMatrix centered = samples.rowwise() - m.mean.transpose();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n > 1 ? n - 1 : 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) fail(ErrorCode::kGeneric, "PCA eigendecomposition failed");

  const Eigen::VectorXd& evals = solver.eigenvalues();  // ascending
  const double top = std::max(evals(d - 1), 0.0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < d; ++i)
    if (top > 0 && evals(i) > 1e-12 * top) ++rank;
  if (rank < keep) {
    std::ostringstream msg;
    msg << "covariance has rank " << rank << ", below the " << keep << " components required";
    fail(ErrorCode::kInsufficientData, msg.str());
  }

  m.basis.resize(d, keep);
  m.eigenvalues.resize(keep);
  for (Eigen::Index j = 0; j < keep; ++j) {
    Eigen::VectorXd col = solver.eigenvectors().col(d - 1 - j);
    Eigen::Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col(arg) < 0) col = -col;
    m.basis.col(j) = col;
    m.eigenvalues(j) = evals(d - 1 - j);
  }
  return m;
}

// ---------------------------------------------------------------- GMM

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2*pi)
constexpr double kMinWeight = 1e-10;
constexpr int kLanes = 16;

struct GaussianCache {
  std::vector<double> log_norm;  // log w_k - 0.5 * sum_d log(2 pi var)
  SampleMatrix inv_var;
};

GaussianCache make_cache(const GmmModel& m) {
  GaussianCache c;
  const int K = m.components(), d = m.dim();
  c.log_norm.resize(static_cast<std::size_t>(K));
  c.inv_var = m.variances.cwiseInverse();
  for (int k = 0; k < K; ++k) {
    double s = std::log(m.weights(k));
    for (int j = 0; j < d; ++j) s -= 0.5 * (kLog2Pi + std::log(m.variances(k, j)));
    c.log_norm[static_cast<std::size_t>(k)] = s;
  }
  return c;
}

double posteriors_cached(const GmmModel& m, const GaussianCache& c, const double* x, double* gamma) {
  const int K = m.components(), d = m.dim();
  double best = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k) {
    const double* mu = m.means.row(k).data();
    const double* iv = c.inv_var.row(k).data();
    double q = 0;
    for (int j = 0; j < d; ++j) {
      const double diff = x[j] - mu[j];
      q += diff * diff * iv[j];
    }
    gamma[k] = c.log_norm[static_cast<std::size_t>(k)] - 0.5 * q;
    best = std::max(best, gamma[k]);
  }
  double sum = 0;
  for (int k = 0; k < K; ++k) sum += gamma[k] = std::exp(gamma[k] - best);
  for (int k = 0; k < K; ++k) gamma[k] /= sum;
  return best + std::log(sum);
}

// Sufficient statistics centered on the current means.
struct EStats {
  std::vector<double> nk;
  SampleMatrix first;   // sum gamma (x - mu)
  SampleMatrix second;  // sum gamma (x - mu)^2
  double log_likelihood = 0;

  EStats(int K, int d) : nk(static_cast<std::size_t>(K), 0.0), first(SampleMatrix::Zero(K, d)), second(SampleMatrix::Zero(K, d)) {}
};

EStats e_step(const SampleMatrix& x, const GmmModel& m, int threads) {
  const int K = m.components(), d = m.dim();
  const GaussianCache cache = make_cache(m);
  const Eigen::Index n = x.rows();
  std::vector<EStats> lanes(kLanes, EStats(K, d));

  auto run_lane = [&](int lane) {
    EStats& s = lanes[static_cast<std::size_t>(lane)];
    std::vector<double> gamma(static_cast<std::size_t>(K));
    const Eigen::Index lo = n * lane / kLanes, hi = n * (lane + 1) / kLanes;
    for (Eigen::Index i = lo; i < hi; ++i) {
      const double* xi = x.row(i).data();
      s.log_likelihood += posteriors_cached(m, cache, xi, gamma.data());
      for (int k = 0; k < K; ++k) {
        const double g = gamma[static_cast<std::size_t>(k)];
        if (g == 0.0) continue;
        s.nk[static_cast<std::size_t>(k)] += g;
        const double* mu = m.means.row(k).data();
        double* f = s.first.row(k).data();
        double* sq = s.second.row(k).data();
        for (int j = 0; j < d; ++j) {
          const double diff = xi[j] - mu[j];
          f[j] += g * diff;
          sq[j] += g * diff * diff;
        }
      }
    }
  };

  const int workers = std::clamp(threads, 1, kLanes);
  if (workers == 1) {
    for (int lane = 0; lane < kLanes; ++lane) run_lane(lane);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (int lane = w; lane < kLanes; lane += workers) run_lane(lane);
      });
    for (auto& t : pool) t.join();
  }

  EStats total(K, d);
  for (const auto& s : lanes) {
    for (int k = 0; k < K; ++k) total.nk[static_cast<std::size_t>(k)] += s.nk[static_cast<std::size_t>(k)];
    total.first += s.first;
    total.second += s.second;
    total.log_likelihood += s.log_likelihood;
  }
  return total;
}

double squared_distance(const double* a, const double* b, int d) {
  double s = 0;
  for (int j = 0; j < d; ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return s;
}

// Index of the sample farthest from its nearest current mean.
Eigen::Index farthest_sample(const SampleMatrix& x, const SampleMatrix& means, int active) {
  Eigen::Index arg = 0;
  double best = -1;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (int k = 0; k < active; ++k)
      nearest = std::min(nearest, squared_distance(x.row(i).data(), means.row(k).data(), static_cast<int>(x.cols())));
    if (nearest > best) {
      best = nearest;
      arg = i;
    }
  }
  return arg;
}

}  // namespace

double GmmModel::posteriors(std::span<const double> x, std::span<double> gamma) const {
  if (static_cast<int>(x.size()) != dim() || static_cast<int>(gamma.size()) != components())
    fail(ErrorCode::kInvalidArgument, "GMM posterior: dimension mismatch");
  return posteriors_cached(*this, make_cache(*this), x.data(), gamma.data());
}

double GmmModel::mean_log_likelihood(const SampleMatrix& x) const {
  if (x.cols() != dim()) fail(ErrorCode::kInvalidArgument, "GMM likelihood: dimension mismatch");
  if (x.rows() == 0) return 0.0;
  const GaussianCache cache = make_cache(*this);
  std::vector<double> gamma(static_cast<std::size_t>(components()));
  double s = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) s += posteriors_cached(*this, cache, x.row(i).data(), gamma.data());
  return s / static_cast<double>(x.rows());
}

GmmFit fit_gmm(const SampleMatrix& x, int K, std::uint64_t seed, const GmmOptions& opt) {
  const Eigen::Index n = x.rows();
  const int d = static_cast<int>(x.cols());
  if (K < 1) fail(ErrorCode::kInvalidArgument, "GMM needs at least one component");
  if (d < 1) fail(ErrorCode::kInvalidArgument, "GMM samples have no dimensions");
  if (n < 10 * static_cast<Eigen::Index>(K)) {
    std::ostringstream msg;
    msg << "GMM with " << K << " components needs at least " << 10 * K << " samples, got " << n;
    fail(ErrorCode::kInsufficientData, msg.str());
  }

  const Eigen::RowVectorXd data_mean = x.colwise().mean();
  const Eigen::RowVectorXd data_var = (x.rowwise() - data_mean).array().square().colwise().mean();
  Eigen::RowVectorXd floor(d);
  for (int j = 0; j < d; ++j) floor(j) = std::max(opt.variance_floor * data_var(j), 1e-12);

  GmmFit fit;
  GmmModel& m = fit.model;
  m.weights = Eigen::VectorXd::Constant(K, 1.0 / K);
  m.means.resize(K, d);
  m.variances.resize(K, d);

  // k-means++ seeding.
  Rng rng(seed);
  std::vector<double> nearest(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  m.means.row(0) = x.row(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n))));
  for (int k = 1; k < K; ++k) {
    double total = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      nearest[static_cast<std::size_t>(i)] =
          std::min(nearest[static_cast<std::size_t>(i)], squared_distance(x.row(i).data(), m.means.row(k - 1).data(), d));
      total += nearest[static_cast<std::size_t>(i)];
    }
    Eigen::Index pick = n - 1;
    if (total > 0) {
      double r = rng.uniform() * total;
      for (Eigen::Index i = 0; i < n; ++i) {
        r -= nearest[static_cast<std::size_t>(i)];
        if (r < 0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
    }
    m.means.row(k) = x.row(pick);
  }

  // Hard assignment gives the starting weights and variances.
  int reinit = 0;
  for (;;) {
    std::vector<double> count(static_cast<std::size_t>(K), 0.0);
    SampleMatrix sum = SampleMatrix::Zero(K, d), sq = SampleMatrix::Zero(K, d);
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (int k = 0; k < K; ++k) {
        const double dist = squared_distance(x.row(i).data(), m.means.row(k).data(), d);
        if (dist < bd) {
          bd = dist;
          best = k;
        }
      }
      count[static_cast<std::size_t>(best)] += 1;
      sum.row(best) += x.row(i);
      sq.row(best) += x.row(i).array().square().matrix();
    }
    int empty = -1;
    for (int k = 0; k < K && empty < 0; ++k)
      if (count[static_cast<std::size_t>(k)] == 0) empty = k;
    if (empty >= 0) {
      if (++reinit > opt.max_reinitializations)
        fail(ErrorCode::kInsufficientData, "GMM initialization left a component empty");
      m.means.row(empty) = x.row(farthest_sample(x, m.means, K));
      continue;
    }
    for (int k = 0; k < K; ++k) {
      const double c = count[static_cast<std::size_t>(k)];
      m.weights(k) = c / static_cast<double>(n);
      m.means.row(k) = sum.row(k) / c;
      for (int j = 0; j < d; ++j) {
        const double mu = m.means(k, j);
        m.variances(k, j) = std::max(sq(k, j) / c - mu * mu, floor(j));
      }
    }
    break;
  }

  EStats stats = e_step(x, m, opt.threads);
  fit.log_likelihood.push_back(stats.log_likelihood / static_cast<double>(n));
  for (int it = 0; it < opt.max_iterations; ++it) {
    bool reinit_now = false;
    for (int k = 0; k < K; ++k) {
      const double nk = stats.nk[static_cast<std::size_t>(k)];
      if (nk / static_cast<double>(n) < kMinWeight) {
        if (++reinit > opt.max_reinitializations)
          fail(ErrorCode::kInsufficientData, "GMM component collapsed repeatedly");
        m.means.row(k) = x.row(farthest_sample(x, m.means, K));
        m.variances.row(k) = data_var.cwiseMax(floor);
        m.weights(k) = 1.0 / static_cast<double>(n);
        reinit_now = true;
        continue;
      }
      m.weights(k) = nk / static_cast<double>(n);
      for (int j = 0; j < d; ++j) {
        const double shift = stats.first(k, j) / nk;
        m.means(k, j) += shift;
        m.variances(k, j) = std::max(stats.second(k, j) / nk - shift * shift, floor(j));
      }
    }
    if (reinit_now) m.weights /= m.weights.sum();

    stats = e_step(x, m, opt.threads);
    const double ll = stats.log_likelihood / static_cast<double>(n);
    const double prev = fit.log_likelihood.back();
    fit.log_likelihood.push_back(ll);
    if (reinit_now) {
      fit.reinitialized_at.push_back(static_cast<int>(fit.log_likelihood.size()) - 1);
      continue;
    }
    if (ll - prev < opt.tolerance * std::abs(prev)) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

// ---------------------------------------------------------------- Fisher vectors

std::vector<double> fisher_encode(const SampleMatrix& x, const GmmModel& gmm) {
  const int K = gmm.components(), d = gmm.dim();
  std::vector<double> out(static_cast<std::size_t>(2 * K * d), 0.0);
  if (x.rows() == 0) return out;
  if (x.cols() != d) fail(ErrorCode::kInvalidArgument, "Fisher encoding: descriptor dimension does not match GMM");

  const GaussianCache cache = make_cache(gmm);
  const SampleMatrix sigma = gmm.variances.cwiseSqrt();
  double* gmu = out.data();
  double* gsig = out.data() + static_cast<std::size_t>(K * d);
  std::vector<double> gamma(static_cast<std::size_t>(K));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double* xi = x.row(i).data();
    posteriors_cached(gmm, cache, xi, gamma.data());
    for (int k = 0; k < K; ++k) {
      const double g = gamma[static_cast<std::size_t>(k)];
      if (g == 0.0) continue;
      const double* mu = gmm.means.row(k).data();
      const double* sd = sigma.row(k).data();
      for (int j = 0; j < d; ++j) {
        const double z = (xi[j] - mu[j]) / sd[j];
        gmu[k * d + j] += g * z;
        gsig[k * d + j] += g * (z * z - 1.0);
      }
    }
  }
  const double n = static_cast<double>(x.rows());
  for (int k = 0; k < K; ++k) {
    const double sm = 1.0 / (n * std::sqrt(gmm.weights(k)));
    const double ss = 1.0 / (n * std::sqrt(2.0 * gmm.weights(k)));
    for (int j = 0; j < d; ++j) {
      gmu[k * d + j] *= sm;
      gsig[k * d + j] *= ss;
    }
  }
  return out;
}

void power_normalize(std::span<double> v) {
  for (double& x : v) x = std::copysign(std::sqrt(std::abs(x)), x);
}

void l2_normalize(std::span<double> v) {
  double s = 0;
  for (double x : v) s += x * x;
  if (s <= 0) return;
  const double inv = 1.0 / std::sqrt(s);
  for (double& x : v) x *= inv;
}

// ---------------------------------------------------------------- pooling

const char* pool_mode_name(PoolMode mode) { return mode == PoolMode::kJoint ? "joint" : "concat"; }

PoolMode parse_pool_mode(const std::string& name) {
  if (name == "joint") return PoolMode::kJoint;
  if (name == "concat") return PoolMode::kConcat;
  fail(ErrorCode::kConfig, "unknown pooling mode '" + name + "' (expected joint or concat)");
}

std::size_t FisherEncoder::type_dimension(int type) const {
  const auto& g = types[static_cast<std::size_t>(type)].gmm;
  return 2 * static_cast<std::size_t>(g.components()) * static_cast<std::size_t>(g.dim());
}

std::size_t FisherEncoder::dimension(PoolMode m, std::size_t num_lengths) const {
  std::size_t total = 0;
  for (int t = 0; t < kDescriptorTypes; ++t) total += type_dimension(t);
  return m == PoolMode::kJoint ? total : total * num_lengths;
}

namespace {

SampleMatrix gather(const DescriptorsByLength& descriptors, std::span<const int> lengths, int type) {
  std::size_t rows = 0;
  for (int l : lengths)
    if (auto it = descriptors.find(l); it != descriptors.end()) rows += it->second.size();
  const int dim = kDescriptorTypeDims[static_cast<std::size_t>(type)];
  SampleMatrix m(static_cast<Eigen::Index>(rows), dim);
  Eigen::Index r = 0;
  for (int l : lengths) {
    auto it = descriptors.find(l);
    if (it == descriptors.end()) continue;
    for (const auto& ds : it->second) {
      const auto part = ds.part(type);
      if (static_cast<int>(part.size()) != dim)
        fail(ErrorCode::kInvalidArgument, std::string("descriptor ") + kDescriptorTypeNames[static_cast<std::size_t>(type)] +
                                              " has wrong dimension");
      for (int j = 0; j < dim; ++j) m(r, j) = part[static_cast<std::size_t>(j)];
      ++r;
    }
  }
  return m;
}

void append_normalized_fv(const SampleMatrix& raw, const TypeEncoder& enc, std::vector<double>& out) {
  std::vector<double> fv =
      raw.rows() == 0 ? std::vector<double>(2 * static_cast<std::size_t>(enc.gmm.components()) * enc.gmm.dim(), 0.0)
                      : fisher_encode(enc.pca.project(raw), enc.gmm);
  power_normalize(fv);
  l2_normalize(fv);
  out.insert(out.end(), fv.begin(), fv.end());
}

}  // namespace

VideoRepresentation lstmf_pool(const DescriptorsByLength& descriptors, const FisherEncoder& encoder, PoolMode mode,
                               std::span<const int> lengths) {
  if (lengths.empty()) fail(ErrorCode::kLengthMismatch, "no lengths requested");
  for (int l : lengths)
    if (std::find(encoder.lengths.begin(), encoder.lengths.end(), l) == encoder.lengths.end())
      fail(ErrorCode::kLengthMismatch, "length " + std::to_string(l) + " is not covered by the encoder");
  for (int t = 0; t < kDescriptorTypes; ++t) {
    const auto& te = encoder.types[static_cast<std::size_t>(t)];
    if (te.gmm.components() == 0 || te.pca.output_dim() != te.gmm.dim())
      fail(ErrorCode::kInvalidArgument,
           std::string("encoder has no usable model for descriptor type ") + kDescriptorTypeNames[static_cast<std::size_t>(t)]);
  }

  VideoRepresentation rep;
  rep.mode = mode;
  rep.lengths.assign(lengths.begin(), lengths.end());
  rep.values.reserve(encoder.dimension(mode, lengths.size()));

  std::size_t count = 0;
  for (int l : lengths)
    if (auto it = descriptors.find(l); it != descriptors.end()) count += it->second.size();
  rep.empty = count == 0;

  for (int t = 0; t < kDescriptorTypes; ++t) {
    const auto& te = encoder.types[static_cast<std::size_t>(t)];
    if (mode == PoolMode::kJoint) {
      append_normalized_fv(gather(descriptors, lengths, t), te, rep.values);
    } else {
      for (int l : lengths) {
        const int one[1] = {l};
        append_normalized_fv(gather(descriptors, one, t), te, rep.values);
      }
    }
  }
  l2_normalize(rep.values);
  return rep;
}

// ---------------------------------------------------------------- persistence

namespace {

Json vector_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json rows_json(const SampleMatrix& m) {
  Json a = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vector_json(m.row(r).transpose()));
  return a;
}

Eigen::VectorXd json_vector(const Json& j, const char* what) {
  if (!j.is_array()) fail(ErrorCode::kInput, std::string("encoder field ") + what + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

SampleMatrix json_rows(const Json& j, const char* what) {
  if (!j.is_array() || j.empty()) fail(ErrorCode::kInput, std::string("encoder field ") + what + " must be a non-empty array");
  const std::size_t cols = j[0].size();
  SampleMatrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (j[r].size() != cols) fail(ErrorCode::kInput, std::string("encoder field ") + what + " is ragged");
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
  }
  return m;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

Json encoder_to_json(const FisherEncoder& enc) {
  Json j;
  j["version"] = 1;
  j["mode"] = pool_mode_name(enc.mode);
  j["lengths"] = enc.lengths;
  j["feature_config_hash"] = hash_hex(enc.feature_config_hash);
  Json per_type = Json::object();
  for (int t = 0; t < kDescriptorTypes; ++t) {
    const auto& te = enc.types[static_cast<std::size_t>(t)];
    Json basis = Json::array();
    for (Eigen::Index c = 0; c < te.pca.basis.cols(); ++c) basis.push_back(vector_json(te.pca.basis.col(c)));
    per_type[kDescriptorTypeNames[static_cast<std::size_t>(t)]] = {
        {"pca", {{"mean", vector_json(te.pca.mean)}, {"basis", basis}, {"eigenvalues", vector_json(te.pca.eigenvalues)}}},
        {"gmm",
         {{"weights", vector_json(te.gmm.weights)}, {"means", rows_json(te.gmm.means)}, {"variances", rows_json(te.gmm.variances)}}},
    };
  }
  j["per_type"] = per_type;
  return j;
}

FisherEncoder encoder_from_json(const Json& j) {
  try {
    if (j.at("version").get<int>() != 1) fail(ErrorCode::kInput, "unsupported encoder version");
    FisherEncoder enc;
    enc.mode = parse_pool_mode(j.at("mode").get<std::string>());
    enc.lengths = j.at("lengths").get<std::vector<int>>();
    enc.feature_config_hash = std::stoull(j.at("feature_config_hash").get<std::string>(), nullptr, 16);
    const Json& per_type = j.at("per_type");
    for (int t = 0; t < kDescriptorTypes; ++t) {
      const char* name = kDescriptorTypeNames[static_cast<std::size_t>(t)];
      if (!per_type.contains(name)) fail(ErrorCode::kInput, std::string("encoder lacks descriptor type ") + name);
      const Json& e = per_type.at(name);
      auto& te = enc.types[static_cast<std::size_t>(t)];
      te.pca.mean = json_vector(e.at("pca").at("mean"), "pca.mean");
      const SampleMatrix cols = json_rows(e.at("pca").at("basis"), "pca.basis");
      te.pca.basis = cols.transpose();
      te.pca.eigenvalues = json_vector(e.at("pca").at("eigenvalues"), "pca.eigenvalues");
      te.gmm.weights = json_vector(e.at("gmm").at("weights"), "gmm.weights");
      te.gmm.means = json_rows(e.at("gmm").at("means"), "gmm.means");
      te.gmm.variances = json_rows(e.at("gmm").at("variances"), "gmm.variances");
      if (te.pca.basis.rows() != kDescriptorTypeDims[static_cast<std::size_t>(t)] || te.pca.mean.size() != te.pca.basis.rows() ||
          te.gmm.means.cols() != te.pca.basis.cols() || te.gmm.variances.rows() != te.gmm.means.rows() ||
          te.gmm.variances.cols() != te.gmm.means.cols() || te.gmm.weights.size() != te.gmm.means.rows())
        fail(ErrorCode::kInput, std::string("encoder model for ") + name + " has inconsistent dimensions");
    }
    return enc;
  } catch (const Json::exception& e) {
    fail(ErrorCode::kInput, std::string("malformed encoder JSON: ") + e.what());
  }
}

void save_encoder(const std::filesystem::path& path, const FisherEncoder& encoder) {
  write_text_file(path, dump_json(encoder_to_json(encoder)));
}

FisherEncoder load_encoder(const std::filesystem::path& path) { return encoder_from_json(read_json_file(path)); }

}  // namespace lstmf
