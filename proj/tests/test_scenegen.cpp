#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <numbers>
#include <vector>

#include "spnkit/scene_generator.hpp"
#include "test_support.hpp"

using namespace spnkit;
using Catch::Approx;

namespace {

GenConfig base_config(int count, std::uint64_t seed, int n = 5) {
  GenConfig cfg;
  cfg.count = count;
  cfg.seed = seed;
  cfg.codebook = "unit-test";
  cfg.n = n;
  return cfg;
}

/// CDF of the range law: normal(3, 10) truncated to [3, 50].
double truncated_range_cdf(double x) {
  const double lo = testutil::normal_cdf(0.0);              // (3-3)/10
  const double hi = testutil::normal_cdf(4.7);              // (50-3)/10
  return (testutil::normal_cdf((x - 3.0) / 10.0) - lo) / (hi - lo);
}

double truncated_range_quantile(double p) {
  double lo = 3.0, hi = 50.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (truncated_range_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("accepted draws assemble into an exact-ray pose", "[scenegen]") {
  const ResolvedGenConfig rc(base_config(1, 0));
  const Pose pose = pose_from_draws(rc, rc.cam.width_px / 2, rc.cam.height_px / 2, 10.0,
                                    UnitQuaternion{});
  REQUIRE(pose.t.x == Approx(0.0).margin(1e-12));
  REQUIRE(pose.t.y == Approx(0.0).margin(1e-12));
  REQUIRE(pose.t.z == Approx(10.0).margin(1e-12));

  // Off-center draws still project the body origin onto the drawn pixel.
  SplitMix64 rng(91);
  for (int i = 0; i < 20; ++i) {
    const double cu = rc.cam.width_px * rng.next_unit();
    const double cv = rc.cam.height_px * rng.next_unit();
    const double range = 3.0 + 30.0 * rng.next_unit();
    const Pose p = pose_from_draws(rc, cu, cv, range, testutil::random_quaternion(rng));
    REQUIRE(p.t.norm() == Approx(range).margin(1e-9));
    const ProjectedPoint proj = project_point(rc.cam, Pose(UnitQuaternion{}, p.t), {0, 0, 0});
    REQUIRE(proj.u == Approx(cu).margin(1e-9));
    REQUIRE(proj.v == Approx(cv).margin(1e-9));
  }
}

TEST_CASE("sampled ranges respect the rejection bounds", "[scenegen]") {
  const ResolvedGenConfig rc(base_config(1, 0x5C301));
  PoseDrawStats stats;
  const int count = 10000;
  for (int i = 0; i < count; ++i) {
    const Pose pose = sample_pose(rc, static_cast<std::uint64_t>(i), &stats);
    const double range = pose.t.norm();
    REQUIRE(range >= 3.0);
    REQUIRE(range <= 50.0);
  }
  // With the default spread of 5/2 the image size per axis, only about
  // Phi(0.2)-Phi(-0.2) of draws land in frame per axis; jointly ~2.51%.
  const double p_axis = testutil::normal_cdf(0.2) - testutil::normal_cdf(-0.2);
  const double accepted_fraction = static_cast<double>(count) / stats.center_attempts;
  REQUIRE(accepted_fraction == Approx(p_axis * p_axis).margin(0.002));
}

TEST_CASE("sampled attitudes are Haar distributed", "[scenegen]") {
  const ResolvedGenConfig rc(base_config(1, 0x5C302));
  std::vector<double> angles;
  for (int i = 0; i < 10000; ++i)
    angles.push_back(sample_pose(rc, static_cast<std::uint64_t>(i)).q.angle());
  const auto cdf = [](double theta) { return (theta - std::sin(theta)) / std::numbers::pi; };
  REQUIRE(testutil::ks_statistic(std::move(angles), cdf) < 0.02);
}

TEST_CASE("sampled ranges follow the truncated normal law", "[scenegen]") {
  const ResolvedGenConfig rc(base_config(1, 0x5C303));
  const int count = 10000, bins = 20;
  std::vector<double> edges;
  for (int k = 1; k < bins; ++k)
    edges.push_back(truncated_range_quantile(static_cast<double>(k) / bins));

  std::vector<int> observed(bins, 0);
  for (int i = 0; i < count; ++i) {
    const double r = sample_pose(rc, static_cast<std::uint64_t>(i)).t.norm();
    int bin = 0;
    while (bin < bins - 1 && r >= edges[static_cast<std::size_t>(bin)]) ++bin;
    ++observed[static_cast<std::size_t>(bin)];
  }
  const double expected = static_cast<double>(count) / bins;
  double chi2 = 0.0;
  for (const int o : observed) chi2 += (o - expected) * (o - expected) / expected;
  // 0.99 quantile of chi-squared with 19 degrees of freedom.
  REQUIRE(chi2 < 36.191);
}

TEST_CASE("generation is deterministic and parallel-stable", "[scenegen]") {
  const AttitudeCodebook book = build_codebook(64, 0x5C304);
  const GenConfig cfg = base_config(100, 1, 3);
  const Dataset a = generate_dataset(cfg, book, 1);
  const Dataset b = generate_dataset(cfg, book, 4);
  REQUIRE(serialize_records(a) == serialize_records(b));
  REQUIRE(serialize_manifest(a) == serialize_manifest(b));

  const Dataset c = generate_dataset(base_config(100, 2, 3), book, 1);
  REQUIRE(serialize_records(a) != serialize_records(c));
}

TEST_CASE("records carry their own tight box and label", "[scenegen]") {
  const AttitudeCodebook book = build_codebook(128, 0x5C305);
  const GenConfig cfg = base_config(50, 0x5C306, 4);
  const Dataset ds = generate_dataset(cfg, book);
  const WireframeModel model = resolve_model(ds.cfg.model);
  REQUIRE(ds.records.size() == 50);
  for (const SceneRecord& rec : ds.records) {
    const TightBox tb = tight_bbox(ds.cam, rec.pose, model);
    REQUIRE(tb.box.left == rec.box.left);
    REQUIRE(tb.box.right == rec.box.right);
    REQUIRE(tb.box.top == rec.box.top);
    REQUIRE(tb.box.bottom == rec.box.bottom);
    REQUIRE(tb.in_frame == rec.in_frame);
    REQUIRE(rec.range_m == Approx(rec.pose.t.norm()).margin(1e-12));

    const AttitudeLabel relabel = make_label(book, rec.pose.q, cfg.n, cfg.weighting);
    REQUIRE(relabel.omega == rec.label.omega);
    REQUIRE(relabel.alphas == rec.label.alphas);
    REQUIRE(relabel.w_target == rec.label.w_target);
  }
}

TEST_CASE("dataset files round-trip exactly", "[scenegen]") {
  const auto dir = testutil::temp_dir("scenegen");
  const AttitudeCodebook book = build_codebook(64, 0x5C307);
  GenConfig cfg = base_config(40, 0x5C308, 3);
  const Dataset ds = generate_dataset(cfg, book);
  save_dataset(ds, dir / "ds");
  const Dataset back = load_dataset(dir / "ds");
  REQUIRE(back.records.size() == ds.records.size());
  REQUIRE(back.cfg.seed == ds.cfg.seed);
  REQUIRE(back.cfg.n == ds.cfg.n);
  REQUIRE(back.codebook_hash_hex == ds.codebook_hash_hex);
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const SceneRecord& x = ds.records[i];
    const SceneRecord& y = back.records[i];
    REQUIRE(x.id == y.id);
    REQUIRE(std::memcmp(&x.pose.q, &y.pose.q, sizeof(UnitQuaternion)) == 0);
    REQUIRE(x.pose.t.x == y.pose.t.x);
    REQUIRE(x.pose.t.y == y.pose.t.y);
    REQUIRE(x.pose.t.z == y.pose.t.z);
    REQUIRE(x.box.left == y.box.left);
    REQUIRE(x.label.omega == y.label.omega);
    REQUIRE(x.label.alphas == y.label.alphas);
    REQUIRE(x.label.w_target == y.label.w_target);
  }
  // Re-saving the loaded dataset reproduces the files byte for byte.
  save_dataset(back, dir / "ds2");
  REQUIRE(read_file(dir / "ds" / "manifest.txt") == read_file(dir / "ds2" / "manifest.txt"));
  REQUIRE(read_file(dir / "ds" / "records.txt") == read_file(dir / "ds2" / "records.txt"));
}

TEST_CASE("manifest hashes pin the configuration and codebook", "[scenegen]") {
  const AttitudeCodebook book = build_codebook(64, 0x5C309);
  const Dataset a = generate_dataset(base_config(5, 7, 3), book);
  const Dataset b = generate_dataset(base_config(5, 8, 3), book);
  REQUIRE(config_fingerprint(a.cfg, a.cam) != config_fingerprint(b.cfg, b.cam));
  REQUIRE(a.codebook_hash_hex == to_hex(codebook_hash(book)));
}

TEST_CASE("misconfigured generation fails loudly", "[scenegen]") {
  GenConfig bad = base_config(0, 1);
  REQUIRE_THROWS_AS(ResolvedGenConfig(bad), InvalidInput);
  GenConfig swapped = base_config(1, 1);
  swapped.range_min = 50.0;
  swapped.range_max = 3.0;
  REQUIRE_THROWS_AS(ResolvedGenConfig(swapped), InvalidInput);
  // A range window the sampler cannot hit trips the rejection cap.
  GenConfig unreachable = base_config(1, 1);
  unreachable.range_mean = 3.0;
  unreachable.range_sigma = 1e-9;
  unreachable.range_min = 49.0;
  unreachable.range_max = 50.0;
  const ResolvedGenConfig rc(unreachable);
  REQUIRE_THROWS_AS(sample_pose(rc, 0), InvalidInput);
  REQUIRE_THROWS_AS(load_dataset("/nonexistent/spnkit-ds"), ParseError);
}
