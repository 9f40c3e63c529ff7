#include "lstmf/media.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "lstmf/error.hpp"

namespace lstmf {

namespace fs = std::filesystem;

GrayFrame::GrayFrame(int width, int height, std::uint8_t fill)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
  if (width <= 0 || height <= 0) fail(ErrorCode::kInvalidArgument, "frame dimensions must be positive");
}

GrayFrame::GrayFrame(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width <= 0 || height <= 0) fail(ErrorCode::kInvalidArgument, "frame dimensions must be positive");
  if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    fail(ErrorCode::kInvalidArgument, "frame data length does not match width*height");
}

FrameSequence make_sequence(std::vector<GrayFrame> frames, double fps) {
  if (frames.empty()) fail(ErrorCode::kInput, "frame sequence is empty");
  FrameSequence seq;
  seq.width = frames.front().width();
  seq.height = frames.front().height();
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i].width() != seq.width || frames[i].height() != seq.height) {
      std::ostringstream msg;
      msg << "frame " << i << " is " << frames[i].width() << "x" << frames[i].height()
          << ", expected " << seq.width << "x" << seq.height;
      fail(ErrorCode::kInput, msg.str());
    }
  }
  seq.frames = std::move(frames);
  seq.fps = fps;
  return seq;
}

namespace {

std::string lowercase_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

// Reads one whitespace-delimited PNM header token, skipping '#' comments.
std::string pnm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

int parse_positive(const std::string& s, const std::string& what, const fs::path& path) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used == s.size() && v > 0) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::kInput, path.string() + ": bad " + what + " '" + s + "'");
}

}  // namespace

GrayFrame read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kInput, "cannot open " + path.string());
  if (pnm_token(in) != "P5") fail(ErrorCode::kInput, path.string() + ": only binary P5 PGM is supported");
  const int w = parse_positive(pnm_token(in), "width", path);
  const int h = parse_positive(pnm_token(in), "height", path);
  const int maxval = parse_positive(pnm_token(in), "maxval", path);
  if (maxval != 255) fail(ErrorCode::kInput, path.string() + ": PGM maxval must be 255");
  std::vector<std::uint8_t> data(static_cast<std::size_t>(w) * h);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (in.gcount() != static_cast<std::streamsize>(data.size()))
    fail(ErrorCode::kInput, path.string() + ": truncated PGM data");
  return GrayFrame(w, h, std::move(data));
}

GrayFrame read_png(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str()))
    fail(ErrorCode::kInput, path.string() + ": " + image.message);

  const auto fmt = image.format;
  if ((fmt & (PNG_FORMAT_FLAG_LINEAR | PNG_FORMAT_FLAG_ALPHA | PNG_FORMAT_FLAG_COLORMAP)) != 0) {
    png_image_free(&image);
    fail(ErrorCode::kInput, path.string() + ": only 8-bit gray or RGB PNG is supported");
  }
  const bool color = (fmt & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int w = static_cast<int>(image.width);
  const int h = static_cast<int>(image.height);
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    fail(ErrorCode::kInput, path.string() + ": " + msg);
  }
  if (!color) return GrayFrame(w, h, std::move(buf));

  GrayFrame out(w, h);
  auto dst = out.pixels();
  for (std::size_t i = 0; i < dst.size(); ++i)
    dst[i] = luma(buf[3 * i], buf[3 * i + 1], buf[3 * i + 2]);
  return out;
}

FrameSequence read_y4m(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kInput, "cannot open " + path.string());
  std::string header;
  if (!std::getline(in, header)) fail(ErrorCode::kInput, path.string() + ": empty file");

  std::istringstream tokens(header);
  std::string tok;
  tokens >> tok;
  if (tok != "YUV4MPEG2") fail(ErrorCode::kInput, path.string() + ": missing YUV4MPEG2 signature");

  int w = 0, h = 0;
  double fps = 0.0;
  std::string colorspace = "420jpeg";
  while (tokens >> tok) {
    const char key = tok[0];
    const std::string val = tok.substr(1);
    if (key == 'W') {
      w = parse_positive(val, "width", path);
    } else if (key == 'H') {
      h = parse_positive(val, "height", path);
    } else if (key == 'C') {
      colorspace = val;
    } else if (key == 'F') {
      const auto colon = val.find(':');
      if (colon != std::string::npos) {
        const double num = std::atof(val.substr(0, colon).c_str());
        const double den = std::atof(val.substr(colon + 1).c_str());
        if (den > 0) fps = num / den;
      }
    }
  }
  if (w <= 0 || h <= 0) fail(ErrorCode::kInput, path.string() + ": Y4M header lacks W/H");

  const std::size_t luma_size = static_cast<std::size_t>(w) * h;
  std::size_t chroma_size = 0;
  if (colorspace == "420" || colorspace == "420jpeg") {
    chroma_size = 2 * static_cast<std::size_t>((w + 1) / 2) * static_cast<std::size_t>((h + 1) / 2);
  } else if (colorspace != "mono") {
    fail(ErrorCode::kInput, path.string() + ": unsupported Y4M colorspace C" + colorspace);
  }

  std::vector<GrayFrame> frames;
  std::string frame_header;
  while (std::getline(in, frame_header)) {
    if (frame_header.rfind("FRAME", 0) != 0)
      fail(ErrorCode::kInput, path.string() + ": malformed FRAME marker");
    std::vector<std::uint8_t> y(luma_size);
    in.read(reinterpret_cast<char*>(y.data()), static_cast<std::streamsize>(luma_size));
    if (in.gcount() != static_cast<std::streamsize>(luma_size))
      fail(ErrorCode::kInput, path.string() + ": truncated Y4M frame");
    in.ignore(static_cast<std::streamsize>(chroma_size));
    frames.emplace_back(w, h, std::move(y));
  }
  return make_sequence(std::move(frames), fps);
}

FrameSequence load_frame_sequence(const fs::path& path) {
  std::error_code ec;
  if (!fs::exists(path, ec)) fail(ErrorCode::kInput, "no such file or directory: " + path.string());

  if (fs::is_directory(path, ec)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (!entry.is_regular_file()) continue;
      const auto ext = lowercase_extension(entry.path());
      if (ext == ".pgm" || ext == ".png") files.push_back(entry.path());
    }
    if (files.empty()) fail(ErrorCode::kInput, path.string() + ": no PGM/PNG frames found");
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    std::vector<GrayFrame> frames;
    frames.reserve(files.size());
    for (const auto& f : files)
      frames.push_back(lowercase_extension(f) == ".pgm" ? read_pgm(f) : read_png(f));
    return make_sequence(std::move(frames));
  }

  const auto ext = lowercase_extension(path);
  if (ext == ".y4m") return read_y4m(path);
  if (ext == ".pgm") return make_sequence({read_pgm(path)});
  if (ext == ".png") return make_sequence({read_png(path)});
  fail(ErrorCode::kInput, path.string() + ": unsupported input format (expected .y4m or an image directory)");
}

void write_pgm(const fs::path& path, const GrayFrame& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kInput, "cannot write " + path.string());
  out << "P5\n" << frame.width() << " " << frame.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(frame.pixels().data()),
            static_cast<std::streamsize>(frame.pixels().size()));
}

void write_y4m(const fs::path& path, const FrameSequence& seq) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kInput, "cannot write " + path.string());
  const int fps = seq.fps > 0 ? static_cast<int>(std::lround(seq.fps)) : 25;
  out << "YUV4MPEG2 W" << seq.width << " H" << seq.height << " F" << fps << ":1 Ip A1:1 Cmono\n";
  for (const auto& f : seq.frames) {
    out << "FRAME\n";
    out.write(reinterpret_cast<const char*>(f.pixels().data()),
              static_cast<std::streamsize>(f.pixels().size()));
  }
}

int pyramid_side(int base, double scale_factor, int level) {
  // The epsilon keeps exact ratios such as 64 / sqrt(2)^2 from rounding down.
  return static_cast<int>(std::floor(base / std::pow(scale_factor, level) + 1e-9));
}

int pyramid_level_count(int width, int height, double scale_factor, int max_levels) {
  int levels = 0;
  while (levels < max_levels && pyramid_side(width, scale_factor, levels) >= kMinPyramidSide &&
         pyramid_side(height, scale_factor, levels) >= kMinPyramidSide)
    ++levels;
  return levels;
}

GrayFrame resize_bilinear(const GrayFrame& src, int width, int height) {
  if (width == src.width() && height == src.height()) return src;
  GrayFrame dst(width, height);
  const double sx = static_cast<double>(src.width()) / width;
  const double sy = static_cast<double>(src.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.height() - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.width() - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width() - 1);
      const double wx = fx - x0;
      const double top = (1.0 - wx) * src.at(x0, y0) + wx * src.at(x1, y0);
      const double bottom = (1.0 - wx) * src.at(x0, y1) + wx * src.at(x1, y1);
      const double v = (1.0 - wy) * top + wy * bottom;
      dst.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return dst;
}

Pyramid build_pyramid(const GrayFrame& frame, double scale_factor, int max_levels) {
  if (!(scale_factor > 1.0)) fail(ErrorCode::kInvalidArgument, "pyramid scale factor must exceed 1");
  if (max_levels < 1) fail(ErrorCode::kInvalidArgument, "pyramid needs at least one level");
  if (frame.width() < kMinPyramidSide || frame.height() < kMinPyramidSide)
    fail(ErrorCode::kInput, "frame smaller than 32x32 cannot form a pyramid");

  Pyramid pyr;
  pyr.scale_factor = scale_factor;
  const int n = pyramid_level_count(frame.width(), frame.height(), scale_factor, max_levels);
  pyr.levels.reserve(static_cast<std::size_t>(n));
  pyr.levels.push_back(frame);
  for (int k = 1; k < n; ++k)
    pyr.levels.push_back(resize_bilinear(frame, pyramid_side(frame.width(), scale_factor, k),
                                         pyramid_side(frame.height(), scale_factor, k)));
  return pyr;
}

}  // namespace lstmf
