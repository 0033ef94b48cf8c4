#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "ltc/errors.hpp"
#include "ltc/matrix.hpp"
#include "ltc/rng.hpp"
#include "ltc/train.hpp"

namespace ltc {

enum class MissingPolicy { Zero, ForwardFill, Error };

inline MissingPolicy missing_policy_from_string(const std::string& name) {
  if (name == "zero") return MissingPolicy::Zero;
  if (name == "ffill" || name == "forward-fill") return MissingPolicy::ForwardFill;
  if (name == "error") return MissingPolicy::Error;
  throw ParameterError("unknown missing policy: " + name);
}

struct NormStats {
  Vec mean, stddev;
  std::vector<bool> constant;  // columns whose stddev was replaced by 1

  bool any_constant() const {
    return std::any_of(constant.begin(), constant.end(), [](bool b) { return b; });
  }
};

// Time-aligned feature and target series. Rows belonging to different
// recordings are separated by segment_starts; windows never span a segment
// boundary.
struct Dataset {
  Matrix features;  // time x features
  Matrix targets;   // time x targets
  std::vector<std::string> feature_names, target_names;
  std::vector<std::size_t> segment_starts{0};
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  cells.push_back(cur);
  return cells;
}

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline std::optional<double> parse_cell(const std::string& raw) {
  const std::string s = trim(raw);
  if (s.empty()) return std::nullopt;
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') return std::nullopt;
  return v;
}

}  // namespace detail

// Comma-separated, first row header, '.' decimal, no quoting. Missing or
// unparseable cells in a requested column follow the given policy; a
// forward fill with no prior value falls back to zero.
inline Dataset load_csv(const std::filesystem::path& path,
                        const std::vector<std::string>& feature_cols,
                        const std::vector<std::string>& target_cols, MissingPolicy policy) {
  std::ifstream in(path);
  if (!in) throw ParameterError("load_csv: cannot open " + path.string());
  if (feature_cols.empty()) throw ParameterError("load_csv: no feature columns requested");

  std::string line;
  if (!std::getline(in, line)) throw ParseError("load_csv: empty file " + path.string());
  const auto header = detail::split_csv_line(line);

  auto col_index = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (detail::trim(header[i]) == name) return i;
    throw SchemaError("load_csv: column '" + name + "' not found in " + path.string());
  };
  std::vector<std::size_t> fidx, tidx;
  for (const auto& c : feature_cols) fidx.push_back(col_index(c));
  for (const auto& c : target_cols) tidx.push_back(col_index(c));

  std::vector<Vec> frows, trows;
  Vec flast(fidx.size(), 0.0), tlast(tidx.size(), 0.0);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw ParseError("load_csv: row " + std::to_string(row) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(header.size()));
    auto fetch = [&](std::size_t col, const std::string& name, Vec& last,
                     std::size_t k) -> double {
      const auto v = detail::parse_cell(cells[col]);
      if (v) {
        last[k] = *v;
        return *v;
      }
      switch (policy) {
        case MissingPolicy::Zero: return 0.0;
        case MissingPolicy::ForwardFill: return last[k];
        case MissingPolicy::Error:
          throw ParseError("load_csv: cannot parse cell at row " + std::to_string(row) +
                           ", column '" + name + "'");
      }
      return 0.0;
    };
    Vec f(fidx.size()), t(tidx.size());
    for (std::size_t k = 0; k < fidx.size(); ++k) f[k] = fetch(fidx[k], feature_cols[k], flast, k);
    for (std::size_t k = 0; k < tidx.size(); ++k) t[k] = fetch(tidx[k], target_cols[k], tlast, k);
    frows.push_back(std::move(f));
    trows.push_back(std::move(t));
  }
  if (frows.empty()) throw ParseError("load_csv: no data rows in " + path.string());

  Dataset ds;
  ds.feature_names = feature_cols;
  ds.target_names = target_cols;
  ds.features = Matrix(frows.size(), fidx.size());
  ds.targets = Matrix(trows.size(), tidx.size());
  for (std::size_t i = 0; i < frows.size(); ++i) {
    std::copy(frows[i].begin(), frows[i].end(), ds.features.row(i).begin());
    std::copy(trows[i].begin(), trows[i].end(), ds.targets.row(i).begin());
  }
  return ds;
}

// Per-column mean/stddev over the given rows (the training portion).
// Constant columns get stddev 1 and are flagged.
inline NormStats compute_norm_stats(const Matrix& values, const std::vector<std::size_t>& rows) {
  if (rows.empty()) throw ParameterError("compute_norm_stats: no rows given");
  NormStats st;
  st.mean.assign(values.cols, 0.0);
  st.stddev.assign(values.cols, 0.0);
  st.constant.assign(values.cols, false);
  for (std::size_t r : rows)
    for (std::size_t c = 0; c < values.cols; ++c) st.mean[c] += values(r, c);
  for (auto& m : st.mean) m /= static_cast<double>(rows.size());
  for (std::size_t r : rows)
    for (std::size_t c = 0; c < values.cols; ++c) {
      const double d = values(r, c) - st.mean[c];
      st.stddev[c] += d * d;
    }
  for (std::size_t c = 0; c < values.cols; ++c) {
    st.stddev[c] = std::sqrt(st.stddev[c] / static_cast<double>(rows.size()));
    if (st.stddev[c] <= 0.0) {
      st.stddev[c] = 1.0;
      st.constant[c] = true;
    }
  }
  return st;
}

inline NormStats compute_norm_stats(const Matrix& values) {
  std::vector<std::size_t> rows(values.rows);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return compute_norm_stats(values, rows);
}

inline void apply_norm(Matrix& values, const NormStats& st) {
  if (st.mean.size() != values.cols) throw ParameterError("apply_norm: column count mismatch");
  for (std::size_t r = 0; r < values.rows; ++r)
    for (std::size_t c = 0; c < values.cols; ++c)
      values(r, c) = (values(r, c) - st.mean[c]) / st.stddev[c];
}

inline void invert_norm(Matrix& values, const NormStats& st) {
  if (st.mean.size() != values.cols) throw ParameterError("invert_norm: column count mismatch");
  for (std::size_t r = 0; r < values.rows; ++r)
    for (std::size_t c = 0; c < values.cols; ++c)
      values(r, c) = values(r, c) * st.stddev[c] + st.mean[c];
}

// (x - mean) / stddev on the feature matrix, stats from the training rows.
inline Dataset normalize(Dataset ds, const NormStats& stats) {
  apply_norm(ds.features, stats);
  return ds;
}

struct SplitRatios {
  double train = 0.75, validation = 0.10, test = 0.15;
};

namespace detail {

struct WindowPlan {
  std::vector<std::size_t> starts;  // window start rows, segment-respecting
  std::vector<std::size_t> order;   // seeded shuffle of starts
  std::size_t n_train = 0, n_val = 0;
  std::size_t skipped_segments = 0;
};

inline WindowPlan plan_windows(const Dataset& ds, std::size_t window_len, std::size_t stride,
                               SplitRatios ratios, RngSeed seed) {
  WindowPlan plan;
  auto bounds = ds.segment_starts;
  bounds.push_back(ds.features.rows);
  for (std::size_t s = 0; s + 1 < bounds.size(); ++s) {
    const std::size_t lo = bounds[s], hi = bounds[s + 1];
    if (hi < lo + window_len) {
      ++plan.skipped_segments;
      continue;
    }
    for (std::size_t b = lo; b + window_len <= hi; b += stride) plan.starts.push_back(b);
  }
  plan.order.resize(plan.starts.size());
  for (std::size_t i = 0; i < plan.order.size(); ++i) plan.order[i] = i;
  Rng rng(seed);
  for (std::size_t i = plan.order.size(); i > 1; --i)
    std::swap(plan.order[i - 1], plan.order[rng.next_below(i)]);
  const auto total = static_cast<double>(plan.starts.size());
  plan.n_train = std::min(static_cast<std::size_t>(std::llround(ratios.train * total)),
                          plan.starts.size());
  plan.n_val = std::min(static_cast<std::size_t>(std::llround(ratios.validation * total)),
                        plan.starts.size() - plan.n_train);
  return plan;
}

}  // namespace detail

struct WindowedSplit {
  std::vector<Window> train, validation, test;
  std::size_t window_len = 0, stride = 1;
  SplitRatios ratios;
  RngSeed seed = 0;
  std::size_t skipped_segments = 0;  // segments shorter than the window

  std::size_t total() const { return train.size() + validation.size() + test.size(); }
};

// Overlapping fixed-length windows at the given stride, randomly split at
// the window level. Counts land within one window of the exact ratios.
inline WindowedSplit window_and_split(const Dataset& ds, std::size_t window_len,
                                      std::size_t stride, SplitRatios ratios, RngSeed seed) {
  if (window_len < 1 || stride < 1)
    throw ParameterError("window_and_split: window length and stride must be >= 1");
  const double rsum = ratios.train + ratios.validation + ratios.test;
  if (std::abs(rsum - 1.0) > 1e-9) throw ParameterError("window_and_split: ratios must sum to 1");

  WindowedSplit out;
  out.window_len = window_len;
  out.stride = stride;
  out.ratios = ratios;
  out.seed = seed;

  detail::WindowPlan plan = detail::plan_windows(ds, window_len, stride, ratios, seed);
  out.skipped_segments = plan.skipped_segments;
  if (plan.starts.empty()) throw ParameterError("window_and_split: no windows fit the data");

  auto make_window = [&](std::size_t start) {
    Window w;
    w.inputs = Matrix(window_len, ds.features.cols);
    w.targets = Matrix(window_len, ds.targets.cols);
    for (std::size_t t = 0; t < window_len; ++t) {
      auto fr = ds.features.row(start + t);
      std::copy(fr.begin(), fr.end(), w.inputs.row(t).begin());
      auto tr = ds.targets.row(start + t);
      std::copy(tr.begin(), tr.end(), w.targets.row(t).begin());
    }
    return w;
  };

  for (std::size_t i = 0; i < plan.order.size(); ++i) {
    Window w = make_window(plan.starts[plan.order[i]]);
    if (i < plan.n_train)
      out.train.push_back(std::move(w));
    else if (i < plan.n_train + plan.n_val)
      out.validation.push_back(std::move(w));
    else
      out.test.push_back(std::move(w));
  }
  return out;
}

// Row indices covered by the training windows; feeds compute_norm_stats so
// normalization statistics come from the training portion only.
inline std::vector<std::size_t> training_rows(const Dataset& ds, std::size_t window_len,
                                              std::size_t stride, SplitRatios ratios,
                                              RngSeed seed) {
  detail::WindowPlan plan = detail::plan_windows(ds, window_len, stride, ratios, seed);
  std::vector<bool> covered(ds.features.rows, false);
  for (std::size_t i = 0; i < plan.n_train; ++i)
    for (std::size_t t = 0; t < window_len; ++t) covered[plan.starts[plan.order[i]] + t] = true;
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < covered.size(); ++r)
    if (covered[r]) rows.push_back(r);
  return rows;
}

}  // namespace ltc
