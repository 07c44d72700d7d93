#pragma once

#include <array>
#include <set>
#include <string>

#include "r2r/config.hpp"
#include "r2r/errors.hpp"

namespace r2r::detail {

/// Typed, key-tracking view of one JSON object.
class Reader {
 public:
  Reader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError(where_ + (key.empty() ? "" : "/" + key) + ": " + what);
  }

  const Json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) fail(key, "missing required key");
    return j_.at(key);
  }

  double number(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : (seen_.insert(key), fallback);
  }

  int integer(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<int>();
  }
  int integer(const std::string& key, int fallback) {
    return has(key) ? integer(key) : (seen_.insert(key), fallback);
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    seen_.insert(key);
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_number_unsigned()) fail(key, "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    seen_.insert(key);
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    return has(key) ? string(key) : (seen_.insert(key), fallback);
  }

  Vector vector(const std::string& key) {
    const Json& v = raw(key);
    if (v.is_number()) return Vector::Constant(1, v.get<double>());
    if (!v.is_array()) fail(key, "expected an array of numbers");
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) fail(key + "/" + std::to_string(i), "expected a number");
      out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
    }
    return out;
  }
  Vector vector(const std::string& key, const Vector& fallback) {
    return has(key) ? vector(key) : (seen_.insert(key), fallback);
  }

  Matrix matrix(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_array() || v.empty()) fail(key, "expected a non-empty array of rows");
    const std::size_t rows = v.size();
    if (!v[0].is_array()) fail(key, "expected an array of rows");
    const std::size_t cols = v[0].size();
    Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
      if (!v[r].is_array() || v[r].size() != cols)
        fail(key + "/" + std::to_string(r), "rows must all have " + std::to_string(cols) + " entries");
      for (std::size_t c = 0; c < cols; ++c) {
        if (!v[r][c].is_number())
          fail(key + "/" + std::to_string(r) + "/" + std::to_string(c), "expected a number");
        out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v[r][c].get<double>();
      }
    }
    return out;
  }

  template <std::size_t N>
  std::array<double, N> fixed(const std::string& key) {
    const Vector v = vector(key);
    if (v.size() != static_cast<Eigen::Index>(N))
      fail(key, "expected exactly " + std::to_string(N) + " numbers");
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) out[i] = v[static_cast<Eigen::Index>(i)];
    return out;
  }

  const Json& object(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_object()) fail(key, "expected an object");
    return v;
  }

  std::string path(const std::string& key) const { return where_ + "/" + key; }

  /// Rejects keys that were never read (typos, misplaced settings).
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(it.key(), "unknown key");
  }

  void ignore(const std::string& key) { seen_.insert(key); }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

template <typename F>
auto rethrow_at(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    if (what.rfind(where, 0) == 0) throw;
    throw ConfigError(where + ": " + what);
  }
}

}  // namespace r2r::detail
