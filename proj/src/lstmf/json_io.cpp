#include "lstmf/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lstmf/error.hpp"

namespace lstmf {

namespace {

void dump_rec(const Json& j, int indent, int depth, std::string& out) {
  const auto newline = [&](int d) {
    if (indent < 0) return;
    out.push_back('\n');
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out.push_back('{');
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out.push_back(',');
        first = false;
        newline(depth + 1);
        out += Json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        dump_rec(it.value(), indent, depth + 1, out);
      }
      newline(depth);
      out.push_back('}');
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Numeric arrays stay on one line; they dominate model files.
      bool scalar = true;
      for (const auto& v : j) scalar = scalar && v.is_primitive();
      out.push_back('[');
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += scalar ? ", " : ",";
        first = false;
        if (!scalar) newline(depth + 1);
        dump_rec(v, indent, depth + 1, out);
      }
      if (!scalar) newline(depth);
      out.push_back(']');
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) fail(ErrorCode::kGeneric, "cannot serialize non-finite number");
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out += buf;
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

std::string dump_json(const Json& j, int indent) {
  std::string out;
  dump_rec(j, indent, 0, out);
  out.push_back('\n');
  return out;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kInput, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return Json::parse(ss.str());
  } catch (const Json::exception& e) {
    fail(ErrorCode::kInput, path.string() + ": invalid JSON: " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kInput, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::kInput, "write failed: " + path.string());
}

}  // namespace lstmf
