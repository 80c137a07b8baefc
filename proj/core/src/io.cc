#include "rffslam/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <system_error>

#include "rffslam/errors.hpp"
#include "rffslam/random.hpp"
#include "rffslam/sim.hpp"

namespace rffslam::io {
namespace fs = std::filesystem;

namespace {

// Malformed row; turned into ParseError or a diagnostic by the row loop.
struct RowError {
  std::string message;
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

// Comma- or whitespace-separated, whichever the line uses.
std::vector<std::string_view> split_fields(std::string_view line) {
  if (line.find(',') == std::string_view::npos) return split_whitespace(line);
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double field_double(std::string_view text, std::string_view name) {
  const auto v = parse_double(text);
  if (!v || !std::isfinite(*v)) {
    throw RowError{"field '" + std::string(name) + "' is not a finite number: '" + std::string(text) + "'"};
  }
  return *v;
}

LandmarkId field_id(std::string_view text, std::string_view name) {
  LandmarkId id = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), id);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    // Some logs write integer ids as floats ("12.0").
    const auto v = parse_double(text);
    if (v && std::isfinite(*v) && *v == std::trunc(*v) && std::abs(*v) < 9.0e15) {
      return static_cast<LandmarkId>(*v);
    }
    throw RowError{"field '" + std::string(name) + "' is not an integer id: '" + std::string(text) + "'"};
  }
  return id;
}

double field_sigma(std::string_view text, std::string_view name) {
  const double v = field_double(text, name);
  if (!(v > 0.0)) throw RowError{"field '" + std::string(name) + "' must be > 0"};
  return v;
}

void expect_fields(const std::vector<std::string_view>& tokens, std::size_t count,
                   std::string_view what) {
  if (tokens.size() != count) {
    throw RowError{std::string(what) + " expects " + std::to_string(count) + " fields, got " +
                   std::to_string(tokens.size())};
  }
}

// Calls `row(tokens, line)` for every data line. `row` returns false for a
// line that is not data (a CSV header) and throws RowError for a malformed one.
template <class RowFn>
void for_each_row(std::string_view text, const std::string& source, bool strict,
                  LoadReport* report, RowFn&& row) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#' || line.front() == '%') continue;
    bool counted = true;
    try {
      counted = row(split_fields(line), line_no);
      if (counted && report) ++report->parsed;
    } catch (const RowError& e) {
      if (strict) throw ParseError(source, line_no, e.message);
      if (report) report->malformed.push_back({source, line_no, e.message});
    }
    if (counted && report) ++report->rows;
    if (end == text.size()) break;
  }
}

class StreamOrder {
 public:
  StreamOrder(std::string source, std::string stream)
      : source_(std::move(source)), stream_(std::move(stream)) {}
  void check(double t, std::size_t line) {
    if (t < last_) {
      throw ValidationError(source_ + ":" + std::to_string(line) + ": " + stream_ +
                            " timestamp " + format_double(t) + " decreases from " +
                            format_double(last_));
    }
    last_ = t;
  }

 private:
  std::string source_;
  std::string stream_;
  double last_ = -INFINITY;
};

bool is_numeric(std::string_view s) { return parse_double(s).has_value(); }

// A non-numeric leading field is a header only before the first data row;
// later it makes the row malformed.
struct HeaderSkip {
  bool data_seen = false;
  bool skip(const std::vector<std::string_view>& fields) {
    if (!data_seen && !is_numeric(fields.front())) return true;
    data_seen = true;
    return false;
  }
};

void add_load_counts(Dataset& ds, DatasetFormat format, const LoadReport& report) {
  const std::string p(kLoadMetadataPrefix);
  ds.metadata[p + "format"] = std::string(to_string(format));
  ds.metadata[p + "rows"] = std::to_string(report.rows);
  ds.metadata[p + "malformed"] = std::to_string(report.malformed.size());
  ds.metadata[p + "ground_truth"] = std::to_string(ds.ground_truth.size());
  ds.metadata[p + "odometry"] = std::to_string(ds.odometry.size());
  ds.metadata[p + "measurements"] = std::to_string(ds.measurements.size());
  ds.metadata[p + "landmarks"] = std::to_string(ds.landmarks.size());
  ds.metadata[p + "landmark_priors"] = std::to_string(ds.landmark_priors.size());
}

// ---- Plaza-style range + odometry logs --------------------------------------
//
// A directory holding whitespace- or comma-separated files, found by suffix:
//   *GT.txt  time x y heading                 ground truth
//   *DR.txt  time delta_distance delta_heading dead reckoning increments
//   *TD.txt  time node_a node_b range          time-of-flight ranges
//   *TL.txt  id x y                            surveyed beacon positions
// Only TD is required. The beacon in a TD row is node_b unless TL lists
// node_a and not node_b. DR increments over (t_{i-1}, t_i] become velocities;
// rows sharing a timestamp are summed.

std::optional<fs::path> find_with_suffix(const fs::path& dir, std::string_view suffix) {
  std::vector<fs::path> hits;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      hits.push_back(entry.path());
    }
  }
  if (hits.empty()) return std::nullopt;
  std::sort(hits.begin(), hits.end());
  return hits.front();
}

Dataset load_plaza(const fs::path& dir, const LoadOptions& options, LoadReport& report) {
  if (!fs::is_directory(dir)) throw IoError(dir.string(), "plaza format expects a directory");
  Dataset ds;
  ds.metadata["source"] = "plaza";

  if (const auto tl = find_with_suffix(dir, "TL.txt")) {
    const std::string src = tl->string();
    HeaderSkip header;
    for_each_row(read_file(*tl), src, options.strict, &report, [&](const auto& f, std::size_t) {
      if (header.skip(f)) return false;
      expect_fields(f, 3, "TL row");
      ds.landmarks.push_back({field_id(f[0], "id"), field_double(f[1], "x"), field_double(f[2], "y")});
      return true;
    });
  }
  std::set<LandmarkId> surveyed;
  for (const auto& l : ds.landmarks) surveyed.insert(l.id);

  if (const auto gt = find_with_suffix(dir, "GT.txt")) {
    const std::string src = gt->string();
    StreamOrder order(src, "ground truth");
    HeaderSkip header;
    for_each_row(read_file(*gt), src, options.strict, &report, [&](const auto& f, std::size_t line) {
      if (header.skip(f)) return false;
      expect_fields(f, 4, "GT row");
      const double t = field_double(f[0], "time");
      const Pose2D pose{field_double(f[1], "x"), field_double(f[2], "y"),
                        wrap_angle(field_double(f[3], "heading"))};
      order.check(t, line);
      ds.ground_truth.push_back({t, pose});
      return true;
    });
  }

  if (const auto dr = find_with_suffix(dir, "DR.txt")) {
    const std::string src = dr->string();
    StreamOrder order(src, "odometry");
    std::vector<std::array<double, 3>> increments;  // time, distance, heading change
    HeaderSkip header;
    for_each_row(read_file(*dr), src, options.strict, &report, [&](const auto& f, std::size_t line) {
      if (header.skip(f)) return false;
      expect_fields(f, 3, "DR row");
      const double t = field_double(f[0], "time");
      const double dd = field_double(f[1], "delta_distance");
      const double da = field_double(f[2], "delta_heading");
      order.check(t, line);
      if (!increments.empty() && increments.back()[0] == t) {
        increments.back()[1] += dd;
        increments.back()[2] += da;
      } else {
        increments.push_back({t, dd, da});
      }
      return true;
    });
    for (std::size_t i = 0; i < increments.size(); ++i) {
      if (i == 0) {
        ds.odometry.push_back({increments[0][0], 0.0, 0.0});
        continue;
      }
      const double dt = increments[i][0] - increments[i - 1][0];
      ds.odometry.push_back({increments[i][0], increments[i][1] / dt, increments[i][2] / dt});
    }
  }

  const auto td = find_with_suffix(dir, "TD.txt");
  if (!td) throw IoError(dir.string(), "no *TD.txt range file");
  {
    const std::string src = td->string();
    StreamOrder order(src, "measurement");
    HeaderSkip header;
    for_each_row(read_file(*td), src, options.strict, &report, [&](const auto& f, std::size_t line) {
      if (header.skip(f)) return false;
      expect_fields(f, 4, "TD row");
      const double t = field_double(f[0], "time");
      const LandmarkId a = field_id(f[1], "node_a");
      const LandmarkId b = field_id(f[2], "node_b");
      const double range = field_double(f[3], "range");
      if (!(range >= 0.0)) throw RowError{"negative range"};
      order.check(t, line);
      Measurement z;
      z.time = t;
      z.landmark_id = (surveyed.count(a) && !surveyed.count(b)) ? a : b;
      z.kind = MeasurementKind::kRange;
      z.value = {range, 0.0};
      z.noise_std = {options.range_sigma, 0.0};
      ds.measurements.push_back(z);
      return true;
    });
  }
  return ds;
}

// ---- Projected bearing CSV ---------------------------------------------------
//
// Rows: time, landmark_id, bearing[, weight]; optional header. Ground truth is
// read from a sibling "<stem>_gt.csv" (time, x, y, heading) when present.
//
// With weights and max_landmarks > 0 the landmark set is subsampled: landmarks
// are drawn without replacement with probability proportional to their total
// weight, then every keyframe left with fewer than min_per_keyframe landmarks
// gets its heaviest unselected ones back until it reaches the floor (or runs out).

std::set<LandmarkId> subsample_landmarks(const std::vector<Measurement>& measurements,
                                         const std::vector<double>& weights,
                                         const LoadOptions& options) {
  std::map<LandmarkId, double> total;
  for (std::size_t i = 0; i < measurements.size(); ++i) total[measurements[i].landmark_id] += weights[i];

  std::set<LandmarkId> selected;
  if (static_cast<std::size_t>(options.max_landmarks) >= total.size()) {
    for (const auto& [id, w] : total) selected.insert(id);
    return selected;
  }
  // Weighted sampling without replacement: keep the largest u^(1/w).
  Rng rng(options.seed);
  std::vector<std::pair<double, LandmarkId>> keys;
  for (const auto& [id, w] : total) {
    const double u = rng.uniform();
    keys.emplace_back(w > 0.0 ? std::log(u) / w : -INFINITY, id);
  }
  std::sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (int k = 0; k < options.max_landmarks; ++k) selected.insert(keys[k].second);

  std::map<double, std::vector<std::pair<double, LandmarkId>>> by_time;
  for (std::size_t i = 0; i < measurements.size(); ++i) {
    by_time[measurements[i].time].emplace_back(weights[i], measurements[i].landmark_id);
  }
  for (auto& [t, seen] : by_time) {
    std::sort(seen.begin(), seen.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::set<LandmarkId> here;
    for (const auto& [w, id] : seen) {
      if (selected.count(id)) here.insert(id);
    }
    for (const auto& [w, id] : seen) {
      if (static_cast<int>(here.size()) >= options.min_per_keyframe) break;
      if (here.insert(id).second) selected.insert(id);
    }
  }
  return selected;
}

Dataset load_bearing_csv(const fs::path& path, const LoadOptions& options, LoadReport& report) {
  Dataset ds;
  ds.metadata["source"] = "bearing_csv";
  const std::string src = path.string();
  StreamOrder order(src, "measurement");
  std::vector<double> weights;
  bool any_weight = false;
  HeaderSkip header;
  for_each_row(read_file(path), src, options.strict, &report, [&](const auto& f, std::size_t line) {
    if (header.skip(f)) return false;
    if (f.size() != 3 && f.size() != 4) {
      throw RowError{"bearing row expects 3 or 4 fields, got " + std::to_string(f.size())};
    }
    const double t = field_double(f[0], "time");
    const LandmarkId id = field_id(f[1], "landmark_id");
    const double bearing = field_double(f[2], "bearing");
    double w = 1.0;
    if (f.size() == 4) {
      w = field_double(f[3], "weight");
      if (w < 0.0) throw RowError{"negative weight"};
      any_weight = true;
    }
    order.check(t, line);
    Measurement z;
    z.time = t;
    z.landmark_id = id;
    z.kind = MeasurementKind::kBearing;
    z.value = {wrap_angle(bearing), 0.0};
    z.noise_std = {options.bearing_sigma, 0.0};
    ds.measurements.push_back(z);
    weights.push_back(w);
    return true;
  });

  if (any_weight && options.max_landmarks > 0) {
    const auto keep = subsample_landmarks(ds.measurements, weights, options);
    std::vector<Measurement> kept;
    for (const auto& z : ds.measurements) {
      if (keep.count(z.landmark_id)) kept.push_back(z);
    }
    ds.metadata["subsampled_landmarks"] = std::to_string(keep.size());
    ds.metadata["subsampled_measurements_dropped"] = std::to_string(ds.measurements.size() - kept.size());
    ds.measurements = std::move(kept);
  }

  const fs::path gt = path.parent_path() / (path.stem().string() + "_gt.csv");
  if (fs::exists(gt)) {
    const std::string gsrc = gt.string();
    StreamOrder gorder(gsrc, "ground truth");
    HeaderSkip header;
    for_each_row(read_file(gt), gsrc, options.strict, &report, [&](const auto& f, std::size_t line) {
      if (header.skip(f)) return false;
      expect_fields(f, 4, "ground-truth row");
      const double t = field_double(f[0], "time");
      const Pose2D pose{field_double(f[1], "x"), field_double(f[2], "y"),
                        wrap_angle(field_double(f[3], "heading"))};
      gorder.check(t, line);
      ds.ground_truth.push_back({t, pose});
      return true;
    });
  }
  return ds;
}

void check_metadata_entry(const std::string& key, const std::string& value) {
  if (key.empty() || key.find_first_of(" \t\r\n") != std::string::npos) {
    throw InvalidArgument("metadata key must be non-empty without whitespace: '" + key + "'");
  }
  if (value.find_first_of("\r\n") != std::string::npos || trim(value) != value) {
    throw InvalidArgument("metadata value for '" + key +
                          "' must be one line without surrounding whitespace");
  }
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) throw InvalidArgument("format_double: conversion failed");
  return std::string(buf, ptr);
}

std::optional<double> parse_double(std::string_view text) {
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

DatasetFormat parse_dataset_format(std::string_view text) {
  if (text == "canonical") return DatasetFormat::kCanonical;
  if (text == "plaza") return DatasetFormat::kPlaza;
  if (text == "bearing_csv") return DatasetFormat::kBearingCsv;
  throw InvalidArgument("unknown dataset format '" + std::string(text) +
                        "' (expected canonical, plaza or bearing_csv)");
}

std::string_view to_string(DatasetFormat format) {
  switch (format) {
    case DatasetFormat::kCanonical: return "canonical";
    case DatasetFormat::kPlaza: return "plaza";
    case DatasetFormat::kBearingCsv: return "bearing_csv";
  }
  return "canonical";
}

// Canonical grammar, one record per line, fields separated by spaces:
//
//   META <key> <value...>
//   LANDMARK <id> <x> <y>
//   LANDMARK_PRIOR <id> <x> <y> <cov_xx> <cov_xy> <cov_yy>
//   GROUNDTRUTH <t> <x> <y> <heading>
//   ODOMETRY <t> <v> <w>
//   MEASUREMENT <t> <id> range <r> <sigma_r>
//   MEASUREMENT <t> <id> bearing <b> <sigma_b>
//   MEASUREMENT <t> <id> range_bearing <r> <b> <sigma_r> <sigma_b>
//
// '#' starts a comment line. Numbers use the shortest round-trip decimal form.
Dataset parse_canonical(std::string_view text, const std::string& source, bool strict,
                        LoadReport* report) {
  Dataset ds;
  StreamOrder gt_order(source, "ground truth");
  StreamOrder odo_order(source, "odometry");
  StreamOrder meas_order(source, "measurement");
  std::set<LandmarkId> prior_ids;
  std::set<LandmarkId> landmark_ids;

  // The META value is the raw remainder of the line, so split lines ourselves.
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    const bool last = end == text.size();
    if (line.empty() || line.front() == '#') {
      if (last) break;
      continue;
    }
    if (report) ++report->rows;
    try {
      const auto f = split_whitespace(line);
      const std::string_view tag = f.front();
      if (tag == "META") {
        if (f.size() < 3) throw RowError{"META expects a key and a value"};
        const auto value_start = static_cast<std::size_t>(f[1].data() - line.data()) + f[1].size();
        ds.metadata[std::string(f[1])] = std::string(trim(line.substr(value_start)));
      } else if (tag == "LANDMARK") {
        expect_fields(f, 4, "LANDMARK");
        const Landmark2D l{field_id(f[1], "id"), field_double(f[2], "x"), field_double(f[3], "y")};
        if (!landmark_ids.insert(l.id).second) throw RowError{"duplicate LANDMARK id " + std::to_string(l.id)};
        ds.landmarks.push_back(l);
      } else if (tag == "LANDMARK_PRIOR") {
        expect_fields(f, 7, "LANDMARK_PRIOR");
        LandmarkPrior p;
        p.id = field_id(f[1], "id");
        p.mean = {field_double(f[2], "x"), field_double(f[3], "y")};
        const double cxx = field_double(f[4], "cov_xx");
        const double cxy = field_double(f[5], "cov_xy");
        const double cyy = field_double(f[6], "cov_yy");
        if (!(cxx > 0.0) || !(cxx * cyy - cxy * cxy > 0.0)) {
          throw RowError{"LANDMARK_PRIOR covariance is not positive definite"};
        }
        p.cov << cxx, cxy, cxy, cyy;
        if (!prior_ids.insert(p.id).second) throw RowError{"duplicate LANDMARK_PRIOR id " + std::to_string(p.id)};
        ds.landmark_priors.push_back(p);
      } else if (tag == "GROUNDTRUTH") {
        expect_fields(f, 5, "GROUNDTRUTH");
        const double t = field_double(f[1], "time");
        const Pose2D pose{field_double(f[2], "x"), field_double(f[3], "y"), field_double(f[4], "heading")};
        gt_order.check(t, line_no);
        ds.ground_truth.push_back({t, pose});
      } else if (tag == "ODOMETRY") {
        expect_fields(f, 4, "ODOMETRY");
        const OdometryControl u{field_double(f[1], "time"), field_double(f[2], "v"), field_double(f[3], "w")};
        odo_order.check(u.time, line_no);
        ds.odometry.push_back(u);
      } else if (tag == "MEASUREMENT") {
        if (f.size() < 4) throw RowError{"MEASUREMENT expects time, id and kind"};
        Measurement z;
        z.time = field_double(f[1], "time");
        z.landmark_id = field_id(f[2], "landmark_id");
        try {
          z.kind = parse_measurement_kind(f[3]);
        } catch (const InvalidArgument& e) {
          throw RowError{e.what()};
        }
        const int dim = z.dim();
        expect_fields(f, 4 + 2 * static_cast<std::size_t>(dim), "MEASUREMENT");
        z.value.setZero();
        z.noise_std.setZero();
        for (int r = 0; r < dim; ++r) {
          z.value(r) = field_double(f[4 + r], "value");
          z.noise_std(r) = field_sigma(f[4 + dim + r], "sigma");
        }
        meas_order.check(z.time, line_no);
        ds.measurements.push_back(z);
      } else {
        throw RowError{"unknown record type '" + std::string(tag) + "'"};
      }
      if (report) ++report->parsed;
    } catch (const RowError& e) {
      if (strict) throw ParseError(source, line_no, e.message);
      if (report) report->malformed.push_back({source, line_no, e.message});
    }
    if (last) break;
  }
  return ds;
}

std::string format_canonical(const Dataset& ds) {
  std::string out = "# rffslam dataset v1\n";
  auto num = [&](double v) {
    out += ' ';
    out += format_double(v);
  };
  for (const auto& [key, value] : ds.metadata) {
    if (key.starts_with(kLoadMetadataPrefix)) continue;
    check_metadata_entry(key, value);
    out += "META " + key + ' ' + value + '\n';
  }
  for (const auto& l : ds.landmarks) {
    out += "LANDMARK " + std::to_string(l.id);
    num(l.x);
    num(l.y);
    out += '\n';
  }
  for (const auto& p : ds.landmark_priors) {
    out += "LANDMARK_PRIOR " + std::to_string(p.id);
    num(p.mean.x());
    num(p.mean.y());
    num(p.cov(0, 0));
    num(p.cov(0, 1));
    num(p.cov(1, 1));
    out += '\n';
  }
  for (const auto& s : ds.ground_truth) {
    out += "GROUNDTRUTH";
    num(s.time);
    num(s.pose.x);
    num(s.pose.y);
    num(s.pose.heading);
    out += '\n';
  }
  for (const auto& u : ds.odometry) {
    out += "ODOMETRY";
    num(u.time);
    num(u.linear_velocity);
    num(u.angular_velocity);
    out += '\n';
  }
  for (const auto& z : ds.measurements) {
    out += "MEASUREMENT";
    num(z.time);
    out += ' ' + std::to_string(z.landmark_id) + ' ' + std::string(to_string(z.kind));
    for (int r = 0; r < z.dim(); ++r) num(z.value(r));
    for (int r = 0; r < z.dim(); ++r) num(z.noise_std(r));
    out += '\n';
  }
  return out;
}

Dataset load_dataset(const fs::path& path, const LoadOptions& options, LoadReport* report) {
  LoadReport local;
  LoadReport& rep = report ? *report : local;
  rep = {};
  if (!fs::exists(path)) throw IoError(path.string(), "no such file or directory");
  Dataset ds;
  switch (options.format) {
    case DatasetFormat::kCanonical:
      ds = parse_canonical(read_file(path), path.string(), options.strict, &rep);
      break;
    case DatasetFormat::kPlaza:
      ds = load_plaza(path, options, rep);
      break;
    case DatasetFormat::kBearingCsv:
      ds = load_bearing_csv(path, options, rep);
      break;
  }
  add_load_counts(ds, options.format, rep);
  return ds;
}

void save_dataset(const Dataset& dataset, const fs::path& path) {
  write_file(path, format_canonical(dataset));
}

Dataset scenario_to_dataset(const sim::Scenario& scenario) {
  Dataset ds;
  ds.ground_truth = scenario.ground_truth;
  ds.odometry = scenario.odometry;
  ds.measurements = scenario.measurements;
  ds.landmarks = scenario.landmarks;
  const auto& c = scenario.config;
  auto& m = ds.metadata;
  m["source"] = "sim";
  m["seed"] = std::to_string(c.seed);
  m["num_landmarks"] = std::to_string(c.num_landmarks);
  m["measurement_kind"] = std::string(to_string(c.kind));
  m["range_noise_std"] = format_double(c.range_noise_std);
  m["bearing_noise_std"] = format_double(c.bearing_noise_std);
  m["duration"] = format_double(c.trajectory.duration);
  m["cadence"] = format_double(c.trajectory.cadence);
  m["world_size"] = format_double(c.trajectory.world_size);
  m["sensor_max_range"] = format_double(c.sensor_max_range);
  m["odometry_velocity_std"] = format_double(c.odometry_velocity_std);
  m["odometry_yaw_rate_std"] = format_double(c.odometry_yaw_rate_std);
  m["blind_times"] = std::to_string(scenario.blind_times.size());
  return ds;
}

std::string format_trajectory_csv(const Trajectory& trajectory) {
  std::string out = "time,x,y,heading\n";
  for (const auto& s : trajectory) {
    out += format_double(s.time) + ',' + format_double(s.pose.x) + ',' + format_double(s.pose.y) +
           ',' + format_double(s.pose.heading) + '\n';
  }
  return out;
}

std::string format_landmarks_csv(const std::vector<Landmark2D>& landmarks) {
  std::string out = "id,x,y\n";
  for (const auto& l : landmarks) {
    out += std::to_string(l.id) + ',' + format_double(l.x) + ',' + format_double(l.y) + '\n';
  }
  return out;
}

Trajectory load_trajectory_csv(const fs::path& path) {
  Trajectory out;
  const std::string src = path.string();
  StreamOrder order(src, "trajectory");
  HeaderSkip header;
  for_each_row(read_file(path), src, true, nullptr, [&](const auto& f, std::size_t line) {
    if (header.skip(f)) return false;
    expect_fields(f, 4, "trajectory row");
    const double t = field_double(f[0], "time");
    order.check(t, line);
    out.push_back({t, {field_double(f[1], "x"), field_double(f[2], "y"), field_double(f[3], "heading")}});
    return true;
  });
  return out;
}

std::vector<Landmark2D> load_landmarks_csv(const fs::path& path) {
  std::vector<Landmark2D> out;
  HeaderSkip header;
  for_each_row(read_file(path), path.string(), true, nullptr, [&](const auto& f, std::size_t) {
    if (header.skip(f)) return false;
    expect_fields(f, 3, "landmark row");
    out.push_back({field_id(f[0], "id"), field_double(f[1], "x"), field_double(f[2], "y")});
    return true;
  });
  return out;
}

void save_results(const Trajectory& trajectory, const std::vector<Landmark2D>& landmarks,
                  const eval::EvalReport* report, const fs::path& directory) {
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw IoError(directory.string(), ec.message());
  write_file(directory / "trajectory.csv", format_trajectory_csv(trajectory));
  write_file(directory / "landmarks.csv", format_landmarks_csv(landmarks));
  if (report) {
    write_file(directory / "metrics.json", eval::report_to_json(*report));
    write_file(directory / "errors.csv", eval::report_series_csv(*report));
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError(path.string(), "read failed");
  return buf.str();
}

void write_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw IoError(path.string(), "write failed");
}

}  // namespace rffslam::io
