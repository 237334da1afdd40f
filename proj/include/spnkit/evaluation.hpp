#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "spnkit/camera.hpp"
#include "spnkit/error.hpp"
#include "spnkit/quaternion.hpp"
#include "spnkit/scene_generator.hpp"
#include "spnkit/text_io.hpp"
#include "spnkit/vec.hpp"

namespace spnkit {

/// Intersection over union of two axis-aligned boxes; 0 when disjoint.
inline double iou(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::min(a.right, b.right) - std::max(a.left, b.left);
  const double ih = std::min(a.bottom, b.bottom) - std::max(a.top, b.top);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

/// Component-wise absolute translation error, meters.
inline Vec3 translation_error(const Vec3& t_true, const Vec3& t_est) {
  if (!t_true.finite() || !t_est.finite()) throw InvalidInput("translation error needs finite inputs");
  return {std::abs(t_true.x - t_est.x), std::abs(t_true.y - t_est.y), std::abs(t_true.z - t_est.z)};
}

/// Attitude error in radians; identical to the geodesic quaternion distance,
/// so q and -q compare equal.
inline double attitude_error(const UnitQuaternion& q_true, const UnitQuaternion& q_est) {
  return angular_distance(q_true, q_est);
}

inline double degrees(double radians) { return radians * 180.0 / std::numbers::pi; }

struct EvalRecord {
  long long id = 0;
  double iou = 0.0;
  Vec3 e_t{0, 0, 0};   // meters
  double e_r_rad = 0.0;
  double range_m = 0.0;  // ground-truth range
};

struct MetricStats {
  double mean = 0.0;
  double median = 0.0;
  double p25 = 0.0;
  double p75 = 0.0;
};

/// Percentile by linear interpolation between order statistics: with sorted
/// values x_0..x_{N-1}, the p-quantile sits at rank h = (N-1)p and equals
/// x_floor(h) + frac(h) * (x_floor(h)+1 - x_floor(h)).
inline double percentile_linear(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw InvalidInput("percentile of empty data");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

inline MetricStats metric_stats(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (const double v : values) sum += v;
  return {sum / static_cast<double>(values.size()), percentile_linear(values, 0.5),
          percentile_linear(values, 0.25), percentile_linear(values, 0.75)};
}

struct ReportBin {
  int bin_index = 0;
  std::size_t count = 0;
  double mean_range_m = 0.0;
  MetricStats iou;
  MetricStats et_x, et_y, et_z;  // meters
  MetricStats er_deg;
};

struct BinnedReport {
  std::size_t bin_size = 0;
  std::vector<ReportBin> bins;
};

/// Sorts by ground-truth range and chunks into consecutive bins of
/// `bin_size` (the last may be short), reporting mean/median/quartiles of
/// each metric per bin. Ties on range order by id so the report is a pure
/// function of its input set.
inline BinnedReport binned_report(std::vector<EvalRecord> records, std::size_t bin_size = 100) {
  if (records.empty()) throw InvalidInput("binned report needs at least one record");
  if (bin_size < 1) throw InvalidInput("bin size must be at least 1");
  std::sort(records.begin(), records.end(), [](const EvalRecord& a, const EvalRecord& b) {
    if (a.range_m != b.range_m) return a.range_m < b.range_m;
    return a.id < b.id;
  });

  BinnedReport report;
  report.bin_size = bin_size;
  for (std::size_t start = 0; start < records.size(); start += bin_size) {
    const std::size_t len = std::min(bin_size, records.size() - start);
    ReportBin bin;
    bin.bin_index = static_cast<int>(start / bin_size);
    bin.count = len;
    std::vector<double> ious, ex, ey, ez, er;
    for (std::size_t i = start; i < start + len; ++i) {
      const EvalRecord& r = records[i];
      bin.mean_range_m += r.range_m;
      ious.push_back(r.iou);
      ex.push_back(r.e_t.x);
      ey.push_back(r.e_t.y);
      ez.push_back(r.e_t.z);
      er.push_back(degrees(r.e_r_rad));
    }
    bin.mean_range_m /= static_cast<double>(len);
    bin.iou = metric_stats(std::move(ious));
    bin.et_x = metric_stats(std::move(ex));
    bin.et_y = metric_stats(std::move(ey));
    bin.et_z = metric_stats(std::move(ez));
    bin.er_deg = metric_stats(std::move(er));
    report.bins.push_back(bin);
  }
  return report;
}

/// One pose estimate to score against the truth record with the same id.
struct PredictionRow {
  long long id;
  UnitQuaternion q;
  Vec3 t;
  BoundingBox box;
};

inline std::string serialize_predictions(const std::vector<PredictionRow>& rows) {
  std::ostringstream out;
  out << "id,qw,qx,qy,qz,tx,ty,tz,b1,b2,b3,b4\n";
  for (const PredictionRow& r : rows) {
    out << r.id << ',' << format_g17(r.q.w()) << ',' << format_g17(r.q.x()) << ','
        << format_g17(r.q.y()) << ',' << format_g17(r.q.z()) << ',' << format_g17(r.t.x) << ','
        << format_g17(r.t.y) << ',' << format_g17(r.t.z) << ',' << format_g17(r.box.left) << ','
        << format_g17(r.box.right) << ',' << format_g17(r.box.top) << ','
        << format_g17(r.box.bottom) << "\n";
  }
  return out.str();
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline std::vector<PredictionRow> load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open predictions " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
  if (split_csv(line).size() != 12) throw ParseError(path.string() + ": unexpected header");
  std::vector<PredictionRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string ctx = path.string() + ":" + std::to_string(lineno);
    const auto f = split_csv(line);
    if (f.size() != 12) throw ParseError(ctx + ": wrong column count");
    rows.push_back(PredictionRow{
        parse_int(f[0], ctx),
        UnitQuaternion(parse_double(f[1], ctx), parse_double(f[2], ctx), parse_double(f[3], ctx),
                       parse_double(f[4], ctx)),
        Vec3{parse_double(f[5], ctx), parse_double(f[6], ctx), parse_double(f[7], ctx)},
        BoundingBox(parse_double(f[8], ctx), parse_double(f[9], ctx), parse_double(f[10], ctx),
                    parse_double(f[11], ctx))});
  }
  return rows;
}

/// Scores predictions against truth, matched by id. Truth and predictions
/// must cover exactly the same ids; the first id present on one side only is
/// reported in the error.
inline std::vector<EvalRecord> evaluate(const Dataset& truth, const std::vector<PredictionRow>& preds) {
  std::map<long long, const PredictionRow*> by_id;
  std::map<long long, const SceneRecord*> truth_by_id;
  for (const SceneRecord& r : truth.records) truth_by_id[r.id] = &r;
  for (const PredictionRow& p : preds) {
    if (!truth_by_id.count(p.id))
      throw InvalidInput("prediction id " + std::to_string(p.id) + " has no truth record");
    by_id[p.id] = &p;
  }
  std::vector<EvalRecord> out;
  out.reserve(truth.records.size());
  for (const SceneRecord& r : truth.records) {
    const auto it = by_id.find(r.id);
    if (it == by_id.end())
      throw InvalidInput("truth id " + std::to_string(r.id) + " has no prediction");
    const PredictionRow* p = it->second;
    EvalRecord e;
    e.id = r.id;
    e.iou = iou(r.box, p->box);
    e.e_t = translation_error(r.pose.t, p->t);
    e.e_r_rad = attitude_error(r.pose.q, p->q);
    e.range_m = r.range_m;
    out.push_back(e);
  }
  return out;
}

inline std::string serialize_eval_records(const std::vector<EvalRecord>& records) {
  std::ostringstream out;
  out << "id,range_m,iou,et_x_m,et_y_m,et_z_m,er_deg\n";
  for (const EvalRecord& r : records) {
    out << r.id << ',' << format_g17(r.range_m) << ',' << format_g17(r.iou) << ','
        << format_g17(r.e_t.x) << ',' << format_g17(r.e_t.y) << ',' << format_g17(r.e_t.z) << ','
        << format_g17(degrees(r.e_r_rad)) << "\n";
  }
  return out.str();
}

inline std::string serialize_binned_report(const BinnedReport& report) {
  std::ostringstream out;
  out << "bin_index,mean_range_m";
  for (const char* metric : {"iou", "et_x", "et_y", "et_z", "er_deg"})
    for (const char* stat : {"mean", "median", "p25", "p75"}) out << ',' << metric << '_' << stat;
  out << ",count\n";
  const auto put = [&out](const MetricStats& s) {
    out << ',' << format_g17(s.mean) << ',' << format_g17(s.median) << ',' << format_g17(s.p25)
        << ',' << format_g17(s.p75);
  };
  for (const ReportBin& bin : report.bins) {
    out << bin.bin_index << ',' << format_g17(bin.mean_range_m);
    put(bin.iou);
    put(bin.et_x);
    put(bin.et_y);
    put(bin.et_z);
    put(bin.er_deg);
    out << ',' << bin.count << "\n";
  }
  return out.str();
}

}  // namespace spnkit
