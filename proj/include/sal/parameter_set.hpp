#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sal/error.hpp"

namespace sal {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>{});
}

inline std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i != 0) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

/// Dense double-precision tensor, row-major.
struct Tensor {
  Shape shape;
  std::vector<double> values;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0)
      : shape(std::move(s)), values(shape_size(shape), fill) {}
  Tensor(Shape s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {
    if (values.size() != shape_size(shape)) {
      throw ShapeError("tensor value count " + std::to_string(values.size()) +
                       " does not match shape " + shape_string(shape));
    }
  }

  std::size_t size() const noexcept { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  bool all_finite() const {
    return std::all_of(values.begin(), values.end(),
                       [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

struct ParameterEntry {
  std::string name;
  Tensor tensor;
  bool trainable = true;

  friend bool operator==(const ParameterEntry&, const ParameterEntry&) = default;
};

/// Ordered collection of named tensors holding all model weights.
///
/// Order is significant: noise draws walk the entries front to back, and
/// "the last k trainable layers" means the last k trainable entries.
class ParameterSet {
 public:
  ParameterSet() = default;

  /// Appends an entry. Throws ShapeError on a duplicate name.
  ParameterEntry& add(std::string name, Tensor tensor, bool trainable = true) {
    if (find(name) != nullptr) {
      throw ShapeError("duplicate parameter name '" + name + "'");
    }
    entries_.push_back({std::move(name), std::move(tensor), trainable});
    return entries_.back();
  }

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  ParameterEntry& operator[](std::size_t i) { return entries_[i]; }
  const ParameterEntry& operator[](std::size_t i) const { return entries_[i]; }

  auto begin() noexcept { return entries_.begin(); }
  auto end() noexcept { return entries_.end(); }
  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

  const ParameterEntry* find(const std::string& name) const {
    auto it = std::find_if(entries_.begin(), entries_.end(),
                           [&](const ParameterEntry& e) { return e.name == name; });
    return it == entries_.end() ? nullptr : &*it;
  }

  ParameterEntry& at(const std::string& name) {
    auto it = std::find_if(entries_.begin(), entries_.end(),
                           [&](const ParameterEntry& e) { return e.name == name; });
    if (it == entries_.end()) throw ShapeError("no parameter named '" + name + "'");
    return *it;
  }
  const ParameterEntry& at(const std::string& name) const {
    if (const auto* e = find(name)) return *e;
    throw ShapeError("no parameter named '" + name + "'");
  }

  /// Total scalar count over all entries.
  std::size_t element_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.tensor.size();
    return n;
  }

  std::size_t trainable_count() const {
    return static_cast<std::size_t>(std::count_if(
        entries_.begin(), entries_.end(), [](const auto& e) { return e.trainable; }));
  }

  bool all_finite() const {
    return std::all_of(entries_.begin(), entries_.end(),
                       [](const auto& e) { return e.tensor.all_finite(); });
  }

  /// Same names, shapes and order as `other`.
  bool same_layout(const ParameterSet& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].name != other.entries_[i].name ||
          entries_[i].tensor.shape != other.entries_[i].tensor.shape) {
        return false;
      }
    }
    return true;
  }

  void require_same_layout(const ParameterSet& other, const char* what) const {
    if (!same_layout(other)) {
      throw ShapeError(std::string(what) + ": parameter layouts differ");
    }
  }

  /// Zero-filled set with the same layout.
  ParameterSet zeros_like() const {
    ParameterSet out;
    for (const auto& e : entries_) out.add(e.name, Tensor(e.tensor.shape), e.trainable);
    return out;
  }

  /// All values concatenated in entry order.
  std::vector<double> flatten() const {
    std::vector<double> out;
    out.reserve(element_count());
    for (const auto& e : entries_) {
      out.insert(out.end(), e.tensor.values.begin(), e.tensor.values.end());
    }
    return out;
  }

  /// Inverse of flatten(). Throws ShapeError on a size mismatch.
  void assign_flat(std::span<const double> flat) {
    if (flat.size() != element_count()) {
      throw ShapeError("flat vector has " + std::to_string(flat.size()) +
                       " values, parameter set has " + std::to_string(element_count()));
    }
    std::size_t offset = 0;
    for (auto& e : entries_) {
      std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), e.tensor.size(),
                  e.tensor.values.begin());
      offset += e.tensor.size();
    }
  }

  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

 private:
  std::vector<ParameterEntry> entries_;
};

/// Bitwise comparison of values (distinguishes -0.0 and NaN payloads).
inline bool bitwise_equal(const ParameterSet& a, const ParameterSet& b) {
  if (!a.same_layout(b)) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].trainable != b[i].trainable) return false;
    const auto& x = a[i].tensor.values;
    const auto& y = b[i].tensor.values;
    if (!std::equal(x.begin(), x.end(), y.begin(), [](double p, double q) {
          return std::bit_cast<std::uint64_t>(p) == std::bit_cast<std::uint64_t>(q);
        })) {
      return false;
    }
  }
  return true;
}

inline double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double l2_norm(const ParameterSet& p) {
  double s = 0.0;
  for (const auto& e : p) {
    for (double x : e.tensor.values) s += x * x;
  }
  return std::sqrt(s);
}

}  // namespace sal
