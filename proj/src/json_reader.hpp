#pragma once

// Path-tracking JSON reader shared by the format parsers.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include "ostk/io.hpp"

namespace ostk::detail {

// Read-only cursor that remembers where it is in the document.
class Node {
 public:
  Node(const Json& j, std::string path) : j_(&j), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const Json& raw() const { return *j_; }
  bool is_null() const { return j_->is_null(); }

  [[noreturn]] void fail(const std::string& msg, ErrorKind kind = ErrorKind::schema) const {
    throw Error(kind, path_ + ": " + msg);
  }

  Node at(const std::string& key) const {
    if (!j_->is_object()) fail("expected an object");
    const auto it = j_->find(key);
    if (it == j_->end()) throw Error(ErrorKind::schema, path_ + "." + key + ": missing required field");
    return {*it, path_ + "." + key};
  }

  /// Absent or null gives std::nullopt.
  std::optional<Node> opt(const std::string& key) const {
    if (!j_->is_object()) fail("expected an object");
    const auto it = j_->find(key);
    if (it == j_->end() || it->is_null()) return std::nullopt;
    return Node(*it, path_ + "." + key);
  }

  bool has(const std::string& key) const { return j_->is_object() && j_->contains(key); }

  std::size_t size() const {
    if (!j_->is_array()) fail("expected an array");
    return j_->size();
  }

  Node operator[](std::size_t i) const {
    if (!j_->is_array()) fail("expected an array");
    return {(*j_)[i], path_ + "[" + std::to_string(i) + "]"};
  }

  void only_keys(std::initializer_list<const char*> allowed) const {
    if (!j_->is_object()) fail("expected an object");
    for (const auto& [k, v] : j_->items()) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || k == a;
      if (!ok) throw Error(ErrorKind::schema, path_ + "." + k + ": unknown field");
    }
  }

  double num() const {
    if (!j_->is_number()) fail("expected a number");
    const double v = j_->get<double>();
    if (!std::isfinite(v)) fail("expected a finite number");
    return v;
  }

  std::int64_t integer() const {
    if (j_->is_number_integer()) return j_->get<std::int64_t>();
    if (j_->is_number_float()) {
      const double v = j_->get<double>();
      if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9e15) return static_cast<std::int64_t>(v);
    }
    fail("expected an integer");
  }

  std::uint64_t unsigned_integer() const {
    if (j_->is_number_unsigned()) return j_->get<std::uint64_t>();
    const auto v = integer();
    if (v < 0) fail("expected a non-negative integer");
    return static_cast<std::uint64_t>(v);
  }

  std::string str() const {
    if (!j_->is_string()) fail("expected a string");
    return j_->get<std::string>();
  }

  bool boolean() const {
    if (!j_->is_boolean()) fail("expected a boolean");
    return j_->get<bool>();
  }

  std::vector<double> numbers(std::size_t expected = 0) const {
    const std::size_t n = size();
    if (expected != 0 && n != expected) fail("expected " + std::to_string(expected) + " numbers, got " + std::to_string(n));
    std::vector<double> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back((*this)[i].num());
    return out;
  }

  template <typename F>
  auto wrap(F&& f) const {
    // Invariant checks below a node report that node's path.
    try {
      return f();
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::schema) throw;
      throw Error(e.kind(), path_ + ": " + e.what(), e.frames());
    }
  }

 private:
  const Json* j_;
  std::string path_;
};

}  // namespace ostk::detail
