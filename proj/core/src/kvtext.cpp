#include "snerf/kvtext.hpp"

#include <charconv>
#include <cmath>

#include "snerf/errors.hpp"

namespace snerf::kv {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

template <class T>
bool parse_int(std::string_view s, T& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && !s.empty();
}

}  // namespace

std::vector<Line> tokenize(std::string_view text) {
  std::vector<Line> lines;
  int number = 0;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view raw = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++number;
    if (const size_t hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    Line line;
    line.number = number;
    size_t i = 0;
    while (true) {
      while (i < raw.size() && is_space(raw[i])) ++i;
      if (i >= raw.size()) break;
      const size_t start = i;
      while (i < raw.size() && !is_space(raw[i])) ++i;
      const std::string_view tok = raw.substr(start, i - start);
      const int column = static_cast<int>(start) + 1;
      if (line.keyword.empty()) {
        line.keyword = tok;
        continue;
      }
      const size_t eq = tok.find('=');
      if (eq == std::string_view::npos || eq == 0) throw ParseError("expected key=value", number, column);
      line.fields.push_back({std::string(tok.substr(0, eq)), std::string(tok.substr(eq + 1)), column});
    }
    if (!line.keyword.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

const Field* Reader::find(const std::string& key) const {
  for (const auto& f : line_.fields)
    if (f.key == key) return &f;
  return nullptr;
}

const Field& Reader::require(const std::string& key) const {
  const Field* f = find(key);
  if (!f) throw ParseError("missing '" + key + "' for '" + line_.keyword + "'", line_.number, 1);
  return *f;
}

double Reader::number(const std::string& key, double fallback) const {
  const Field* f = find(key);
  if (!f) return fallback;
  double v = 0.0;
  const char* end = f->value.data() + f->value.size();
  auto [ptr, ec] = std::from_chars(f->value.data(), end, v);
  if (ec != std::errc() || ptr != end || f->value.empty() || !std::isfinite(v))
    throw ParseError("expected a number for '" + key + "'", line_.number, f->column);
  return v;
}

std::int64_t Reader::integer(const std::string& key, std::int64_t fallback) const {
  const Field* f = find(key);
  if (!f) return fallback;
  std::int64_t v = 0;
  if (!parse_int(f->value, v)) throw ParseError("expected an integer for '" + key + "'", line_.number, f->column);
  return v;
}

std::uint64_t Reader::unsigned_integer(const std::string& key, std::uint64_t fallback) const {
  const Field* f = find(key);
  if (!f) return fallback;
  std::uint64_t v = 0;
  if (!parse_int(f->value, v))
    throw ParseError("expected an unsigned integer for '" + key + "'", line_.number, f->column);
  return v;
}

std::string Reader::text(const std::string& key, const std::string& fallback) const {
  const Field* f = find(key);
  return f ? f->value : fallback;
}

std::vector<double> Reader::list(const std::string& key, size_t n) const {
  const Field& f = require(key);
  std::vector<double> out;
  size_t start = 0;
  while (true) {
    const size_t comma = f.value.find(',', start);
    const std::string item = f.value.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    const int column = f.column + static_cast<int>(key.size() + 1 + start);
    double v = 0.0;
    const char* end = item.data() + item.size();
    auto [ptr, ec] = std::from_chars(item.data(), end, v);
    if (item.empty() || ec != std::errc() || ptr != end || !std::isfinite(v))
      throw ParseError("expected a number in '" + key + "'", line_.number, column);
    out.push_back(v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (n != 0 && out.size() != n)
    throw ParseError("expected " + std::to_string(n) + " values for '" + key + "'", line_.number, f.column);
  return out;
}

Vec3 Reader::vec3(const std::string& key, const Vec3& fallback) const {
  if (!has(key)) return fallback;
  const auto v = list(key, 3);
  return {v[0], v[1], v[2]};
}

Pose Reader::pose(const std::string& key) const {
  const auto v = list(key, 12);
  Pose p;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) p.rotation(i, j) = v[i * 4 + j];
    p.translation[i] = v[i * 4 + 3];
  }
  if (!p.is_valid(1e-6)) throw ParseError("pose rotation is not orthonormal", line_.number, require(key).column);
  return p;
}

void Reader::check_keys(std::initializer_list<const char*> allowed) const {
  for (const auto& f : line_.fields) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || f.key == a;
    if (!ok) throw ParseError("unknown key '" + f.key + "' for '" + line_.keyword + "'", line_.number, f.column);
  }
}

}  // namespace snerf::kv
