#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "spnkit/attitude_codec.hpp"
#include "spnkit/camera.hpp"
#include "spnkit/error.hpp"
#include "spnkit/parallel.hpp"
#include "spnkit/quaternion.hpp"
#include "spnkit/rng.hpp"
#include "spnkit/rotation_sampling.hpp"
#include "spnkit/text_io.hpp"
#include "spnkit/wireframe.hpp"

namespace spnkit {

/// Resolves "mock" to the built-in target, anything else as a file path.
inline WireframeModel resolve_model(const std::string& spec) {
  if (spec == "mock") return mock_target();
  return load_model(spec);
}

/// Scene sampling configuration. Negative center parameters mean "derive
/// from the camera": mean at the image center, spread of 5/2 of the image
/// size per axis. That spread is far wider than the frame, so center draws
/// are rejection-sampled into the frame and only a few percent of raw draws
/// survive; it is kept configurable for that reason.
struct GenConfig {
  int count = 1;
  std::uint64_t seed = 0;
  std::string camera = "speed";  // "speed" or a camera file path
  std::string model = "mock";    // "mock" or a model file path
  std::string codebook;          // codebook file path
  int n = 5;                     // label width
  GapWeighting weighting = GapWeighting::kAlphaOverPiSquared;
  double center_mean_u = -1.0, center_mean_v = -1.0;    // px
  double center_sigma_u = -1.0, center_sigma_v = -1.0;  // px
  double range_mean = 3.0;   // m
  double range_sigma = 10.0; // m
  double range_min = 3.0;    // m
  double range_max = 50.0;   // m

  void validate() const {
    if (count < 1) throw InvalidInput("dataset count must be at least 1");
    if (!(range_min < range_max)) throw InvalidInput("range bounds must be ordered");
    if (n < 1) throw InvalidInput("label width n must be at least 1");
  }
};

/// GenConfig with camera-derived defaults filled in.
struct ResolvedGenConfig {
  GenConfig cfg;
  PinholeCamera cam;

  explicit ResolvedGenConfig(GenConfig base) : cfg(std::move(base)), cam(resolve_camera(cfg.camera)) {
    cfg.validate();
    if (cfg.center_mean_u < 0.0) cfg.center_mean_u = cam.width_px / 2.0;
    if (cfg.center_mean_v < 0.0) cfg.center_mean_v = cam.height_px / 2.0;
    if (cfg.center_sigma_u < 0.0) cfg.center_sigma_u = 5.0 * cam.width_px / 2.0;
    if (cfg.center_sigma_v < 0.0) cfg.center_sigma_v = 5.0 * cam.height_px / 2.0;
  }
};

struct PoseDrawStats {
  long long center_attempts = 0;
  long long range_attempts = 0;
};

/// Pose assembled from accepted draws: the translation points along the ray
/// through the center pixel, so the body origin projects exactly onto it,
/// and |t| equals the range draw.
inline Pose pose_from_draws(const ResolvedGenConfig& rc, double center_u_px, double center_v_px,
                            double range_m, const UnitQuaternion& q) {
  const PinholeCamera& cam = rc.cam;
  const Vec3 dir = Vec3{(center_u_px - cam.cx_px) / cam.fx_px,
                        (center_v_px - cam.cy_px) / cam.fy_px, 1.0}
                       .normalized();
  return Pose(q, dir * range_m);
}

/// One pose from the given stream. Draw order: box-center attempts (two
/// normals each, rejected until inside the frame), then range attempts (one
/// normal each, rejected until within bounds), then the three attitude
/// uniforms. Rejections keep consuming the same stream.
inline Pose sample_pose_from(const ResolvedGenConfig& rc, SplitMix64& rng,
                             PoseDrawStats* stats = nullptr) {
  const GenConfig& cfg = rc.cfg;
  const PinholeCamera& cam = rc.cam;

  constexpr long long kMaxAttempts = 1000000;
  double cu = 0.0, cv = 0.0;
  long long attempts = 0;
  while (true) {
    if (++attempts > kMaxAttempts)
      throw InvalidInput("center sampling rejected 1e6 draws; check the configured spread");
    cu = cfg.center_mean_u + cfg.center_sigma_u * rng.next_normal();
    cv = cfg.center_mean_v + cfg.center_sigma_v * rng.next_normal();
    if (cu >= 0.0 && cu <= cam.width_px && cv >= 0.0 && cv <= cam.height_px) break;
  }
  if (stats) stats->center_attempts += attempts;

  double range = 0.0;
  attempts = 0;
  while (true) {
    if (++attempts > kMaxAttempts)
      throw InvalidInput("range sampling rejected 1e6 draws; check the configured bounds");
    range = cfg.range_mean + cfg.range_sigma * rng.next_normal();
    if (range >= cfg.range_min && range <= cfg.range_max) break;
  }
  if (stats) stats->range_attempts += attempts;

  return pose_from_draws(rc, cu, cv, range, sample_rotation(rng));
}

/// Pose for record `draw_index`, drawn from the stream seed ^ draw_index.
inline Pose sample_pose(const ResolvedGenConfig& rc, std::uint64_t draw_index,
                        PoseDrawStats* stats = nullptr) {
  SplitMix64 rng = stream_for(rc.cfg.seed, draw_index);
  return sample_pose_from(rc, rng, stats);
}

/// One labeled sample: the ground-truth pose, its tight (un-clipped)
/// projected box, and the attitude-class targets.
struct SceneRecord {
  long long id;
  Pose pose;
  BoundingBox box;
  bool in_frame;
  AttitudeLabel label;
  double range_m;
};

inline SceneRecord build_scene_record(long long id, const Pose& pose, const PinholeCamera& cam,
                                      const WireframeModel& model, const AttitudeCodebook& book,
                                      int n, GapWeighting weighting) {
  const TightBox tb = tight_bbox(cam, pose, model);
  return SceneRecord{id, pose, tb.box, tb.in_frame,
                     make_label(book, pose.q, n, weighting), pose.t.norm()};
}

/// Samples poses for record `index` until one yields a valid record (every
/// vertex in front of the camera, box of nonzero area). Redraws keep
/// consuming the record's own stream.
inline SceneRecord sample_scene(const ResolvedGenConfig& rc, const WireframeModel& model,
                                const AttitudeCodebook& book, std::uint64_t index,
                                PoseDrawStats* stats = nullptr) {
  SplitMix64 rng = stream_for(rc.cfg.seed, index);
  for (int attempt = 0;; ++attempt) {
    if (attempt > 64) throw InvalidInput("scene sampling keeps producing degenerate records");
    const Pose pose = sample_pose_from(rc, rng, stats);
    try {
      return build_scene_record(static_cast<long long>(index), pose, rc.cam, model, book,
                                rc.cfg.n, rc.cfg.weighting);
    } catch (const PointBehindCamera&) {
    } catch (const InvalidInput&) {  // zero-area box
    }
  }
}

struct Dataset {
  GenConfig cfg;             // resolved values (center defaults filled in)
  PinholeCamera cam;
  std::string codebook_hash_hex;
  std::vector<SceneRecord> records;
};

inline std::string weighting_name(GapWeighting w) {
  return w == GapWeighting::kAlphaOverPiSquared ? "alpha-over-pi-squared" : "alpha-over-pi-all-squared";
}

inline GapWeighting weighting_from_name(const std::string& s) {
  if (s == "alpha-over-pi-squared") return GapWeighting::kAlphaOverPiSquared;
  if (s == "alpha-over-pi-all-squared") return GapWeighting::kAlphaOverPiAllSquared;
  throw ParseError("unknown weighting '" + s + "'");
}

inline std::string config_fingerprint(const GenConfig& cfg, const PinholeCamera& cam) {
  std::ostringstream s;
  s << cfg.count << '|' << cfg.seed << '|' << cfg.n << '|' << weighting_name(cfg.weighting) << '|'
    << serialize_camera(cam) << '|' << cfg.model << '|' << format_g17(cfg.center_mean_u) << '|'
    << format_g17(cfg.center_mean_v) << '|' << format_g17(cfg.center_sigma_u) << '|'
    << format_g17(cfg.center_sigma_v) << '|' << format_g17(cfg.range_mean) << '|'
    << format_g17(cfg.range_sigma) << '|' << format_g17(cfg.range_min) << '|'
    << format_g17(cfg.range_max);
  return to_hex(fnv1a64(s.str()));
}

/// Generates `cfg.count` records. Records are independent by stream index,
/// so generation parallelizes freely; results land in id order regardless.
inline Dataset generate_dataset(const GenConfig& cfg, const AttitudeCodebook& book, int jobs = 1) {
  const ResolvedGenConfig rc(cfg);
  const WireframeModel model = resolve_model(cfg.model);
  if (static_cast<int>(book.quats.size()) < rc.cfg.n)
    throw InvalidInput("codebook smaller than label width n");

  std::vector<std::optional<SceneRecord>> slots(static_cast<std::size_t>(cfg.count));
  parallel_for(slots.size(), resolve_jobs(jobs), [&](std::size_t i) {
    slots[i] = sample_scene(rc, model, book, static_cast<std::uint64_t>(i));
  });

  Dataset ds{rc.cfg, rc.cam, to_hex(codebook_hash(book)), {}};
  ds.records.reserve(slots.size());
  for (auto& s : slots) ds.records.push_back(std::move(*s));
  return ds;
}

inline std::string serialize_manifest(const Dataset& ds) {
  std::ostringstream out;
  out << "format spnkit-dataset-1\n"
      << "count " << ds.cfg.count << "\n"
      << "seed " << ds.cfg.seed << "\n"
      << "n " << ds.cfg.n << "\n"
      << "weighting " << weighting_name(ds.cfg.weighting) << "\n"
      << "camera " << ds.cfg.camera << "\n"
      << "camera_N_u " << format_g17(ds.cam.width_px) << "\n"
      << "camera_N_v " << format_g17(ds.cam.height_px) << "\n"
      << "camera_f_x_px " << format_g17(ds.cam.fx_px) << "\n"
      << "camera_f_y_px " << format_g17(ds.cam.fy_px) << "\n"
      << "camera_c_x " << format_g17(ds.cam.cx_px) << "\n"
      << "camera_c_y " << format_g17(ds.cam.cy_px) << "\n"
      << "camera_du " << format_g17(ds.cam.du_m) << "\n"
      << "camera_dv " << format_g17(ds.cam.dv_m) << "\n"
      << "model " << ds.cfg.model << "\n"
      << "codebook " << ds.cfg.codebook << "\n"
      << "codebook_hash " << ds.codebook_hash_hex << "\n"
      << "center_mean_u " << format_g17(ds.cfg.center_mean_u) << "\n"
      << "center_mean_v " << format_g17(ds.cfg.center_mean_v) << "\n"
      << "center_sigma_u " << format_g17(ds.cfg.center_sigma_u) << "\n"
      << "center_sigma_v " << format_g17(ds.cfg.center_sigma_v) << "\n"
      << "range_mean " << format_g17(ds.cfg.range_mean) << "\n"
      << "range_sigma " << format_g17(ds.cfg.range_sigma) << "\n"
      << "range_min " << format_g17(ds.cfg.range_min) << "\n"
      << "range_max " << format_g17(ds.cfg.range_max) << "\n"
      << "config_hash " << config_fingerprint(ds.cfg, ds.cam) << "\n";
  return out.str();
}

/// One record per line: id, attitude (w x y z), translation, box edges,
/// in-frame flag, then the label's class indices, gaps, and weights.
inline std::string serialize_records(const Dataset& ds) {
  std::ostringstream out;
  for (const SceneRecord& r : ds.records) {
    out << r.id << ' ' << format_g17(r.pose.q.w()) << ' ' << format_g17(r.pose.q.x()) << ' '
        << format_g17(r.pose.q.y()) << ' ' << format_g17(r.pose.q.z()) << ' '
        << format_g17(r.pose.t.x) << ' ' << format_g17(r.pose.t.y) << ' '
        << format_g17(r.pose.t.z) << ' ' << format_g17(r.box.left) << ' '
        << format_g17(r.box.right) << ' ' << format_g17(r.box.top) << ' '
        << format_g17(r.box.bottom) << ' ' << (r.in_frame ? 1 : 0);
    for (const int idx : r.label.omega) out << ' ' << idx;
    for (const double a : r.label.alphas) out << ' ' << format_g17(a);
    for (const double w : r.label.w_target) out << ' ' << format_g17(w);
    out << "\n";
  }
  return out.str();
}

inline void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "manifest.txt", serialize_manifest(ds));
  write_file(dir / "records.txt", serialize_records(ds));
}

inline Dataset load_dataset(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.txt";
  const auto kv = read_key_value(manifest_path);
  const std::string ctx = manifest_path.string();
  if (kv_get(kv, "format", ctx) != "spnkit-dataset-1")
    throw ParseError(ctx + ": unsupported dataset format");

  Dataset ds;
  ds.cfg.count = static_cast<int>(parse_int(kv_get(kv, "count", ctx), ctx));
  ds.cfg.seed = parse_uint(kv_get(kv, "seed", ctx), ctx);
  ds.cfg.n = static_cast<int>(parse_int(kv_get(kv, "n", ctx), ctx));
  ds.cfg.weighting = weighting_from_name(kv_get(kv, "weighting", ctx));
  ds.cfg.camera = kv_get(kv, "camera", ctx);
  ds.cfg.model = kv_get(kv, "model", ctx);
  ds.cfg.codebook = kv_get(kv, "codebook", ctx);
  ds.codebook_hash_hex = kv_get(kv, "codebook_hash", ctx);
  ds.cfg.center_mean_u = parse_double(kv_get(kv, "center_mean_u", ctx), ctx);
  ds.cfg.center_mean_v = parse_double(kv_get(kv, "center_mean_v", ctx), ctx);
  ds.cfg.center_sigma_u = parse_double(kv_get(kv, "center_sigma_u", ctx), ctx);
  ds.cfg.center_sigma_v = parse_double(kv_get(kv, "center_sigma_v", ctx), ctx);
  ds.cfg.range_mean = parse_double(kv_get(kv, "range_mean", ctx), ctx);
  ds.cfg.range_sigma = parse_double(kv_get(kv, "range_sigma", ctx), ctx);
  ds.cfg.range_min = parse_double(kv_get(kv, "range_min", ctx), ctx);
  ds.cfg.range_max = parse_double(kv_get(kv, "range_max", ctx), ctx);
  ds.cam.width_px = parse_double(kv_get(kv, "camera_N_u", ctx), ctx);
  ds.cam.height_px = parse_double(kv_get(kv, "camera_N_v", ctx), ctx);
  ds.cam.fx_px = parse_double(kv_get(kv, "camera_f_x_px", ctx), ctx);
  ds.cam.fy_px = parse_double(kv_get(kv, "camera_f_y_px", ctx), ctx);
  ds.cam.cx_px = parse_double(kv_get(kv, "camera_c_x", ctx), ctx);
  ds.cam.cy_px = parse_double(kv_get(kv, "camera_c_y", ctx), ctx);
  ds.cam.du_m = parse_double(kv_get(kv, "camera_du", ctx), ctx);
  ds.cam.dv_m = parse_double(kv_get(kv, "camera_dv", ctx), ctx);
  ds.cam.validate();

  const auto records_path = dir / "records.txt";
  std::ifstream in(records_path);
  if (!in) throw ParseError("cannot open " + records_path.string());
  const std::size_t n = static_cast<std::size_t>(ds.cfg.n);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string rctx = records_path.string() + ":" + std::to_string(lineno);
    const auto f = split_ws(line);
    if (f.size() != 13 + 3 * n) throw ParseError(rctx + ": wrong field count");
    const long long id = parse_int(f[0], rctx);
    const UnitQuaternion q(parse_double(f[1], rctx), parse_double(f[2], rctx),
                           parse_double(f[3], rctx), parse_double(f[4], rctx));
    const Vec3 t{parse_double(f[5], rctx), parse_double(f[6], rctx), parse_double(f[7], rctx)};
    const BoundingBox box(parse_double(f[8], rctx), parse_double(f[9], rctx),
                          parse_double(f[10], rctx), parse_double(f[11], rctx));
    const bool in_frame = parse_int(f[12], rctx) != 0;
    AttitudeLabel label;
    for (std::size_t j = 0; j < n; ++j)
      label.omega.push_back(static_cast<int>(parse_int(f[13 + j], rctx)));
    for (std::size_t j = 0; j < n; ++j) label.alphas.push_back(parse_double(f[13 + n + j], rctx));
    for (std::size_t j = 0; j < n; ++j)
      label.w_target.push_back(parse_double(f[13 + 2 * n + j], rctx));
    ds.records.push_back(SceneRecord{id, Pose(q, t), box, in_frame, std::move(label), t.norm()});
  }
  if (static_cast<int>(ds.records.size()) != ds.cfg.count)
    throw ParseError(records_path.string() + ": record count does not match manifest");
  return ds;
}

}  // namespace spnkit
