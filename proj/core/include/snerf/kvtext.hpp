#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "snerf/geometry.hpp"

namespace snerf::kv {

// Line-oriented text: `keyword key=value key=value ...`, '#' starts a
// comment, blank lines are ignored. Positions are 1-based.

struct Field {
  std::string key;
  std::string value;
  int column = 1;
};

struct Line {
  std::string keyword;
  std::vector<Field> fields;
  int number = 0;
};

/// Throws ParseError on tokens without '='.
std::vector<Line> tokenize(std::string_view text);

/// Typed access to one line's fields. Errors carry the field's position.
class Reader {
 public:
  explicit Reader(const Line& line) : line_(line) {}

  int line_number() const { return line_.number; }
  bool has(const std::string& key) const { return find(key) != nullptr; }

  double number(const std::string& key, double fallback) const;
  std::int64_t integer(const std::string& key, std::int64_t fallback) const;
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  /// Comma-separated numbers; exactly `n` of them unless n == 0.
  std::vector<double> list(const std::string& key, size_t n) const;
  Vec3 vec3(const std::string& key, const Vec3& fallback) const;
  /// 12 row-major values of a 3x4 [R|t]; the rotation must be orthonormal.
  Pose pose(const std::string& key) const;
  /// Throws for the first key not in `allowed`.
  void check_keys(std::initializer_list<const char*> allowed) const;
  /// Throws unless `key` is present.
  const Field& require(const std::string& key) const;

 private:
  const Field* find(const std::string& key) const;

  const Line& line_;
};

}  // namespace snerf::kv
