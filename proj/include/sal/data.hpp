#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "sal/error.hpp"
#include "sal/nn.hpp"
#include "sal/rng.hpp"

namespace sal {

struct Dataset {
  nn::Matrix inputs;        // n x d
  std::vector<int> labels;  // n, each in [0, class_count)
  int class_count = 0;

  std::size_t size() const { return inputs.rows; }
  std::size_t dim() const { return inputs.cols; }

  /// Rows `indices` as a mini-batch.
  nn::Batch batch(std::span<const std::size_t> indices) const {
    nn::Batch b;
    b.inputs = nn::Matrix(indices.size(), dim());
    b.labels.reserve(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
      const auto src = inputs.row(indices[r]);
      std::copy(src.begin(), src.end(), b.inputs.row(r).begin());
      b.labels.push_back(labels[indices[r]]);
    }
    return b;
  }

  nn::Batch all() const {
    nn::Batch b;
    b.inputs = inputs;
    b.labels = labels;
    return b;
  }
};

/// Two interleaving half-circles of radius 1.
///
/// Class 0: (cos t, sin t); class 1: (1 - cos t, 0.5 - sin t), with t evenly
/// spaced over [0, pi] and isotropic Gaussian jitter of `noise_std`.
inline Dataset gen_two_moons(std::size_t n, double noise_std, std::uint64_t seed) {
  if (n < 2 || n % 2 != 0) throw ConfigError("gen_two_moons: n must be even and >= 2");
  if (!(noise_std >= 0.0)) throw ConfigError("gen_two_moons: noise_std must be >= 0");
  Rng rng(seed);
  const std::size_t half = n / 2;
  Dataset ds;
  ds.inputs = nn::Matrix(n, 2);
  ds.labels.resize(n);
  ds.class_count = 2;
  for (std::size_t i = 0; i < half; ++i) {
    const double t = half == 1 ? 0.0
                               : std::numbers::pi * static_cast<double>(i) /
                                     static_cast<double>(half - 1);
    ds.inputs(i, 0) = std::cos(t);
    ds.inputs(i, 1) = std::sin(t);
    ds.labels[i] = 0;
    ds.inputs(half + i, 0) = 1.0 - std::cos(t);
    ds.inputs(half + i, 1) = 0.5 - std::sin(t);
    ds.labels[half + i] = 1;
  }
  if (noise_std > 0.0) {
    for (double& v : ds.inputs.data) v += noise_std * rng.normal();
  }
  return ds;
}

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  for (auto& f : out) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
  }
  return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace detail

/// Standardizes each column to mean 0, std 1 (population std). Constant
/// columns become all zeros.
inline void standardize_columns(nn::Matrix& m) {
  const double n = static_cast<double>(m.rows);
  for (std::size_t j = 0; j < m.cols; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i) mean += m(i, j);
    mean /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i) var += (m(i, j) - mean) * (m(i, j) - mean);
    const double sd = std::sqrt(var / n);
    for (std::size_t i = 0; i < m.rows; ++i) {
      m(i, j) = sd > 0.0 ? (m(i, j) - mean) / sd : 0.0;
    }
  }
}

/// Comma-separated file with a header row; every non-label column is a
/// numeric feature. Errors name the offending line (1-based, header = 1).
inline Dataset load_csv_dataset(const std::filesystem::path& path, const std::string& label_column,
                                bool standardize = false) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": missing header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = detail::split_csv_line(line);
  std::size_t label_idx = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == label_column) label_idx = i;
  }
  if (label_idx == header.size()) {
    throw IoError(path.string() + ": no column named '" + label_column + "'");
  }
  const std::size_t features = header.size() - 1;

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_csv_line(line);
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    if (fields.size() != header.size()) {
      throw IoError(where + "expected " + std::to_string(header.size()) + " fields, got " +
                    std::to_string(fields.size()));
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i == label_idx) {
        long long label = 0;
        if (!detail::parse_number(fields[i], label) || label < 0 || label > 1'000'000) {
          throw IoError(where + "label '" + std::string(fields[i]) + "' is not a non-negative integer");
        }
        labels.push_back(static_cast<int>(label));
      } else {
        double v = 0.0;
        if (!detail::parse_number(fields[i], v) || !std::isfinite(v)) {
          throw IoError(where + "field '" + std::string(fields[i]) + "' is not a finite number");
        }
        values.push_back(v);
      }
    }
  }
  if (labels.empty()) throw IoError(path.string() + ": no data rows");
  Dataset ds;
  ds.inputs = nn::Matrix(labels.size(), features, std::move(values));
  ds.labels = std::move(labels);
  ds.class_count = *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
  if (standardize) standardize_columns(ds.inputs);
  return ds;
}

}  // namespace sal
