#include "lstmf/feature_io.hpp"

#include <bit>
#include <cstring>

#include "lstmf/error.hpp"

namespace lstmf {

namespace {

constexpr char kFeatureMagic[8] = {'L', 'S', 'T', 'M', 'F', '0', '1', '\0'};
constexpr char kRepMagic[8] = {'L', 'S', 'T', 'M', 'F', 'R', 'P', '1'};
constexpr std::uint32_t kMaxIdLength = 1u << 16;

template <class T>
void put_le(std::string& buf, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <class T>
T get_le(const unsigned char* p) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(p[i]) << (8 * i);
  return v;
}

void put_f32(std::string& buf, float f) { put_le<std::uint32_t>(buf, std::bit_cast<std::uint32_t>(f)); }

float get_f32(const unsigned char* p) { return std::bit_cast<float>(get_le<std::uint32_t>(p)); }

void read_exact(std::istream& in, void* dst, std::size_t n, const std::filesystem::path& path) {
  in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) fail(ErrorCode::kInput, path.string() + ": truncated file");
}

std::string read_id(std::istream& in, const std::filesystem::path& path) {
  unsigned char len[4];
  read_exact(in, len, 4, path);
  const auto n = get_le<std::uint32_t>(len);
  if (n > kMaxIdLength) fail(ErrorCode::kInput, path.string() + ": corrupt header");
  std::string id(n, '\0');
  if (n) read_exact(in, id.data(), n, path);
  return id;
}

void put_id(std::string& buf, const std::string& id) {
  if (id.size() > kMaxIdLength) fail(ErrorCode::kInvalidArgument, "video id too long");
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(id.size()));
  buf += id;
}

}  // namespace

std::array<float, kRecordValues> pack_record(const DescriptorSet& d) {
  std::array<float, kRecordValues> r{};
  r[0] = static_cast<float>(d.length);
  r[1] = static_cast<float>(d.scale);
  r[2] = static_cast<float>(d.start_frame);
  r[3] = static_cast<float>(d.mean_x);
  r[4] = static_cast<float>(d.mean_y);
  std::size_t k = kRecordMeta;
  for (int t = 0; t < kDescriptorTypes; ++t) {
    const auto p = d.part(t);
    if (p.size() != static_cast<std::size_t>(kDescriptorTypeDims[t]))
      fail(ErrorCode::kInvalidArgument, "descriptor part has the wrong size");
    for (double v : p) r[k++] = static_cast<float>(v);
  }
  return r;
}

DescriptorSet unpack_record(const std::array<float, kRecordValues>& r) {
  DescriptorSet d;
  d.length = static_cast<int>(r[0]);
  d.scale = static_cast<int>(r[1]);
  d.start_frame = static_cast<int>(r[2]);
  d.mean_x = r[3];
  d.mean_y = r[4];
  std::size_t k = kRecordMeta;
  std::vector<double>* parts[kDescriptorTypes] = {&d.traj, &d.hog, &d.hof, &d.mbh_x, &d.mbh_y};
  for (int t = 0; t < kDescriptorTypes; ++t) {
    parts[t]->assign(r.begin() + static_cast<std::ptrdiff_t>(k),
                     r.begin() + static_cast<std::ptrdiff_t>(k + kDescriptorTypeDims[t]));
    k += static_cast<std::size_t>(kDescriptorTypeDims[t]);
  }
  return d;
}

FeatureWriter::FeatureWriter(const std::filesystem::path& path, const FeatureHeader& header)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) fail(ErrorCode::kInput, "cannot write " + path.string());
  std::string buf(kFeatureMagic, sizeof kFeatureMagic);
  put_le<std::uint64_t>(buf, header.config_hash);
  put_id(buf, header.video_id);
  out_.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void FeatureWriter::write(const DescriptorSet& d) {
  const auto r = pack_record(d);
  std::string buf;
  buf.reserve(4 * kRecordValues);
  for (float f : r) put_f32(buf, f);
  out_.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out_) fail(ErrorCode::kInput, "write failed: " + path_.string());
  ++records_;
}

void FeatureWriter::close() {
  out_.close();
  if (!out_) fail(ErrorCode::kInput, "write failed: " + path_.string());
}

FeatureReader::FeatureReader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) fail(ErrorCode::kInput, "cannot open " + path.string());
  char magic[8];
  read_exact(in_, magic, 8, path);
  if (std::memcmp(magic, kFeatureMagic, 8) != 0) fail(ErrorCode::kInput, path.string() + ": not a feature file");
  unsigned char h[8];
  read_exact(in_, h, 8, path);
  header_.config_hash = get_le<std::uint64_t>(h);
  header_.video_id = read_id(in_, path);
}

bool FeatureReader::next(std::array<float, kRecordValues>& record) {
  unsigned char buf[4 * kRecordValues];
  in_.read(reinterpret_cast<char*>(buf), sizeof buf);
  const auto got = static_cast<std::size_t>(in_.gcount());
  if (got == 0) return false;
  if (got != sizeof buf) fail(ErrorCode::kInput, path_.string() + ": truncated record");
  for (std::size_t i = 0; i < kRecordValues; ++i) record[i] = get_f32(buf + 4 * i);
  return true;
}

bool FeatureReader::next(DescriptorSet& d) {
  std::array<float, kRecordValues> r;
  if (!next(r)) return false;
  d = unpack_record(r);
  return true;
}

FeatureHeader read_feature_header(const std::filesystem::path& path) { return FeatureReader(path).header(); }

std::vector<DescriptorSet> read_feature_records(const std::filesystem::path& path, FeatureHeader* header) {
  FeatureReader reader(path);
  if (header) *header = reader.header();
  std::vector<DescriptorSet> out;
  DescriptorSet d;
  while (reader.next(d)) out.push_back(std::move(d));
  return out;
}

void write_representation(const std::filesystem::path& path, const VideoRepresentation& rep,
                          std::uint64_t config_hash) {
  std::string buf(kRepMagic, sizeof kRepMagic);
  put_le<std::uint64_t>(buf, config_hash);
  put_id(buf, rep.video_id);
  buf.push_back(static_cast<char>(rep.mode == PoolMode::kConcat ? 1 : 0));
  buf.push_back(static_cast<char>(rep.empty ? 1 : 0));
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(rep.lengths.size()));
  for (int l : rep.lengths) put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(l));
  put_le<std::uint64_t>(buf, rep.values.size());
  for (double v : rep.values) put_f32(buf, static_cast<float>(v));
  write_text_file(path, buf);
}

VideoRepresentation read_representation(const std::filesystem::path& path, std::uint64_t* config_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kManifestMismatch, "missing representation " + path.string());
  char magic[8];
  read_exact(in, magic, 8, path);
  if (std::memcmp(magic, kRepMagic, 8) != 0) fail(ErrorCode::kInput, path.string() + ": not a representation file");
  unsigned char b8[8];
  read_exact(in, b8, 8, path);
  if (config_hash) *config_hash = get_le<std::uint64_t>(b8);
  VideoRepresentation rep;
  rep.video_id = read_id(in, path);
  unsigned char flags[2];
  read_exact(in, flags, 2, path);
  rep.mode = flags[0] ? PoolMode::kConcat : PoolMode::kJoint;
  rep.empty = flags[1] != 0;
  unsigned char b4[4];
  read_exact(in, b4, 4, path);
  const auto nlen = get_le<std::uint32_t>(b4);
  if (nlen > 1024) fail(ErrorCode::kInput, path.string() + ": corrupt header");
  for (std::uint32_t i = 0; i < nlen; ++i) {
    read_exact(in, b4, 4, path);
    rep.lengths.push_back(static_cast<int>(get_le<std::uint32_t>(b4)));
  }
  read_exact(in, b8, 8, path);
  const auto dim = get_le<std::uint64_t>(b8);
  if (dim > (std::uint64_t{1} << 32)) fail(ErrorCode::kInput, path.string() + ": corrupt header");
  std::vector<unsigned char> raw(static_cast<std::size_t>(dim) * 4);
  if (!raw.empty()) read_exact(in, raw.data(), raw.size(), path);
  rep.values.resize(static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < rep.values.size(); ++i) rep.values[i] = get_f32(raw.data() + 4 * i);
  return rep;
}

}  // namespace lstmf
