#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lstmf/descript.hpp"
#include "lstmf/json_io.hpp"

namespace lstmf {

// One sample per row.
using SampleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct PcaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd basis;  // input_dim x output_dim, orthonormal columns
  Eigen::VectorXd eigenvalues;  // kept components, descending

  int input_dim() const { return static_cast<int>(basis.rows()); }
  int output_dim() const { return static_cast<int>(basis.cols()); }

  Eigen::VectorXd project(std::span<const double> x) const;
  SampleMatrix project(const SampleMatrix& x) const;
};

// Keeps the top D/2 principal axes. Each column's largest-magnitude entry is
// made positive.
PcaModel fit_pca(const SampleMatrix& samples);

struct GmmModel {
  Eigen::VectorXd weights;     // K
  SampleMatrix means;          // K x d
  SampleMatrix variances;      // K x d, diagonal covariances

  int components() const { return static_cast<int>(weights.size()); }
  int dim() const { return static_cast<int>(means.cols()); }

  // Fills gamma[0..K) with posteriors and returns log p(x).
  double posteriors(std::span<const double> x, std::span<double> gamma) const;
  double mean_log_likelihood(const SampleMatrix& x) const;
};

struct GmmOptions {
  int max_iterations = 200;
  double tolerance = 1e-6;          // relative mean log-likelihood gain
  double variance_floor = 1e-6;     // times the per-dimension data variance
  int max_reinitializations = 3;
  int threads = 1;                  // does not affect results
};

struct GmmFit {
  GmmModel model;
  std::vector<double> log_likelihood;  // mean log-likelihood of each evaluated model
  std::vector<int> reinitialized_at;   // trace indices following a reinitialization
  bool converged = false;
};

// k-means++ seeding followed by diagonal-covariance EM.
GmmFit fit_gmm(const SampleMatrix& samples, int components, std::uint64_t seed, const GmmOptions& options = {});

// Gradients w.r.t. means then variances, component-major within each part.
// An empty descriptor set yields the zero vector.
std::vector<double> fisher_encode(const SampleMatrix& descriptors, const GmmModel& gmm);

void power_normalize(std::span<double> v);
void l2_normalize(std::span<double> v);

enum class PoolMode { kJoint, kConcat };

const char* pool_mode_name(PoolMode mode);
PoolMode parse_pool_mode(const std::string& name);

struct TypeEncoder {
  PcaModel pca;
  GmmModel gmm;
};

struct FisherEncoder {
  std::array<TypeEncoder, kDescriptorTypes> types;
  PoolMode mode = PoolMode::kJoint;
  std::vector<int> lengths;
  std::uint64_t feature_config_hash = 0;

  int gaussians() const { return types[0].gmm.components(); }
  // Fisher vector size of one descriptor type.
  std::size_t type_dimension(int type) const;
  std::size_t dimension(PoolMode mode, std::size_t num_lengths) const;
};

struct VideoRepresentation {
  std::string video_id;
  PoolMode mode = PoolMode::kJoint;
  std::vector<int> lengths;
  std::vector<double> values;
  bool empty = false;  // no descriptors at any requested length
};

using DescriptorsByLength = std::map<int, std::vector<DescriptorSet>>;

// Multi-length pooling. JOINT encodes the union over lengths once per type; CONCAT
// encodes each (type, length) separately. Per-type power + L2, then a final
// L2 over the concatenation.
VideoRepresentation lstmf_pool(const DescriptorsByLength& descriptors, const FisherEncoder& encoder,
                               PoolMode mode, std::span<const int> lengths);

Json encoder_to_json(const FisherEncoder& encoder);
FisherEncoder encoder_from_json(const Json& j);
void save_encoder(const std::filesystem::path& path, const FisherEncoder& encoder);
FisherEncoder load_encoder(const std::filesystem::path& path);

}  // namespace lstmf
