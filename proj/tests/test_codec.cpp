#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <numbers>
#include <vector>

#include "spnkit/attitude_codec.hpp"
#include "test_support.hpp"

using namespace spnkit;
using Catch::Approx;

namespace {
constexpr double kPi = std::numbers::pi;

AttitudeCodebook custom_book(std::vector<UnitQuaternion> quats) {
  AttitudeCodebook book;
  book.m = static_cast<int>(quats.size());
  book.seed = 0;
  book.quats = std::move(quats);
  return book;
}
}  // namespace

TEST_CASE("codebook generation is deterministic down to the file bytes", "[codec]") {
  const AttitudeCodebook a = build_codebook(200, 7);
  const AttitudeCodebook b = build_codebook(200, 7);
  REQUIRE(serialize_codebook(a) == serialize_codebook(b));
  REQUIRE(codebook_hash(a) == codebook_hash(b));
  REQUIRE_THROWS_AS(build_codebook(1, 7), InvalidInput);
  REQUIRE(build_codebook(2, 7).quats.size() == 2);
}

TEST_CASE("codebook files round-trip bit-exactly", "[codec]") {
  const auto dir = testutil::temp_dir("codec");
  const AttitudeCodebook book = build_codebook(64, 0xAA55AA55);
  save_codebook(book, dir / "cb.txt");
  const AttitudeCodebook loaded = load_codebook(dir / "cb.txt");
  REQUIRE(loaded.m == book.m);
  REQUIRE(loaded.seed == book.seed);
  for (int i = 0; i < book.m; ++i)
    REQUIRE(std::memcmp(&loaded.quats[i], &book.quats[i], sizeof(UnitQuaternion)) == 0);
  save_codebook(loaded, dir / "cb2.txt");
  REQUIRE(read_file(dir / "cb.txt") == read_file(dir / "cb2.txt"));
  REQUIRE_THROWS_AS(load_codebook(dir / "nothere.txt"), ParseError);
}

TEST_CASE("codebook classes are pairwise distinct", "[codec]") {
  const AttitudeCodebook book = build_codebook(1000, 0x600D0000);
  double min_gap = kPi;
  for (int i = 0; i < book.m; ++i)
    for (int j = i + 1; j < book.m; ++j)
      min_gap = std::min(min_gap, angular_distance(book.quats[i], book.quats[j]));
  REQUIRE(min_gap > 0.0);
}

TEST_CASE("label for an exact codebook hit", "[codec]") {
  const AttitudeCodebook book = build_codebook(64, 0xC0DEB000);
  const AttitudeLabel label = make_label(book, book.quats[17], 1);
  REQUIRE(label.omega == std::vector<int>{17});
  REQUIRE(label.alphas[0] == 0.0);
  REQUIRE(label.w_target[0] == Approx(1.0).margin(1e-15));
  const auto dense = label.dense_class_target(book.m);
  REQUIRE(dense[17] == 1.0);
}

TEST_CASE("label weights follow the gap formula", "[codec]") {
  // Controlled gaps: classes at 0 and pi/4 from the query, a decoy far away.
  const UnitQuaternion truth;
  const AttitudeCodebook book = custom_book({
      truth,
      UnitQuaternion::from_axis_angle({0, 0, 1}, kPi / 4),
      UnitQuaternion::from_axis_angle({1, 0, 0}, 3.0),
  });
  const AttitudeLabel label = make_label(book, truth, 2);
  REQUIRE(label.omega == std::vector<int>{0, 1});
  REQUIRE(label.alphas[0] == Approx(0.0).margin(1e-12));
  REQUIRE(label.alphas[1] == Approx(kPi / 4).margin(1e-12));

  // Direct evaluation: numerators 1 - alpha/pi^2, shared denominator.
  const double f0 = 0.0, f1 = (kPi / 4) / (kPi * kPi);
  const double denom = 2.0 - f0 - f1;
  REQUIRE(label.w_target[0] == Approx((1.0 - f0) / denom).margin(1e-12));
  REQUIRE(label.w_target[1] == Approx((1.0 - f1) / denom).margin(1e-12));
  REQUIRE(label.w_target[0] == Approx(0.52072).margin(5e-6));
  REQUIRE(label.w_target[1] == Approx(0.47928).margin(5e-6));

  // Equal gaps split the weight evenly.
  const AttitudeCodebook sym = custom_book({
      UnitQuaternion::from_axis_angle({0, 0, 1}, 0.3),
      UnitQuaternion::from_axis_angle({1, 0, 0}, 0.3),
      UnitQuaternion::from_axis_angle({0, 1, 0}, 2.9),
  });
  const AttitudeLabel even = make_label(sym, truth, 2);
  REQUIRE(even.w_target[0] == Approx(0.5).margin(1e-12));
  REQUIRE(even.w_target[1] == Approx(0.5).margin(1e-12));
}

TEST_CASE("alternate gap weighting squares the normalized gap", "[codec]") {
  const UnitQuaternion truth;
  const AttitudeCodebook book = custom_book({
      truth,
      UnitQuaternion::from_axis_angle({0, 0, 1}, kPi / 4),
      UnitQuaternion::from_axis_angle({1, 0, 0}, 3.0),
  });
  const AttitudeLabel label = make_label(book, truth, 2, GapWeighting::kAlphaOverPiAllSquared);
  const double f1 = (1.0 / 4.0) * (1.0 / 4.0);  // (alpha/pi)^2 at alpha = pi/4
  const double denom = 2.0 - f1;
  REQUIRE(label.w_target[0] == Approx(1.0 / denom).margin(1e-12));
  REQUIRE(label.w_target[1] == Approx((1.0 - f1) / denom).margin(1e-12));
}

TEST_CASE("label invariants across random queries", "[codec]") {
  const AttitudeCodebook book = build_codebook(256, 0xFACE0000);
  SplitMix64 rng(71);
  for (int trial = 0; trial < 50; ++trial) {
    const UnitQuaternion q = testutil::random_quaternion(rng);
    const AttitudeLabel label = make_label(book, q, 5);
    REQUIRE(label.n() == 5);

    double v_sum = 0.0;
    int nonzero = 0;
    for (const double v : label.dense_class_target(book.m)) {
      v_sum += v;
      if (v != 0.0) {
        ++nonzero;
        REQUIRE(v == Approx(0.2).margin(1e-15));
      }
    }
    REQUIRE(nonzero == 5);
    REQUIRE(v_sum == Approx(1.0).margin(1e-12));

    double w_sum = 0.0;
    for (std::size_t j = 0; j < label.w_target.size(); ++j) {
      REQUIRE(label.w_target[j] > 0.0);
      w_sum += label.w_target[j];
      if (j > 0) {
        REQUIRE(label.alphas[j] >= label.alphas[j - 1]);
        REQUIRE(label.w_target[j] <= label.w_target[j - 1]);
      }
    }
    REQUIRE(w_sum == Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("softmax basics", "[codec]") {
  const std::vector<double> flat(7, 3.25);
  for (const double p : softmax(flat)) REQUIRE(p == Approx(1.0 / 7.0).margin(1e-15));

  const std::vector<double> two{0.0, std::log(3.0)};
  const std::vector<int> support{0, 1};
  const auto sm = softmax_over(two, support);
  REQUIRE(sm[0] == Approx(0.25).margin(1e-15));
  REQUIRE(sm[1] == Approx(0.75).margin(1e-15));

  SplitMix64 rng(72);
  std::vector<double> x(16);
  for (double& v : x) v = 3.0 * rng.next_normal();
  const auto base = softmax(x);
  for (double& v : x) v += 17.5;  // shift invariance
  const auto shifted = softmax(x);
  for (std::size_t i = 0; i < x.size(); ++i)
    REQUIRE(shifted[i] == Approx(base[i]).margin(1e-12));

  REQUIRE_THROWS_AS(softmax_over(x, std::vector<int>{}), InvalidInput);
  REQUIRE_THROWS_AS(softmax(std::vector<double>{}), InvalidInput);
}

TEST_CASE("losses at their targets reduce to entropies", "[codec]") {
  const AttitudeCodebook book = build_codebook(32, 0xE27);
  SplitMix64 rng(73);
  const UnitQuaternion q = testutil::random_quaternion(rng);
  AttitudeConfig cfg;
  cfg.m = book.m;
  cfg.n = 4;
  cfg.lambda = 0.0;
  const AttitudeLabel label = make_label(book, q, cfg.n);

  // Class logits whose softmax equals the uniform-on-omega target.
  std::vector<double> v(book.m, -1e4);
  for (const int idx : label.omega) v[idx] = std::log(1.0 / cfg.n);
  // Weight logits whose restricted softmax equals the target weights.
  std::vector<double> w(book.m, 0.0);
  for (std::size_t j = 0; j < label.omega.size(); ++j)
    w[label.omega[j]] = std::log(label.w_target[j]);

  const AttitudeLossReport rep = attitude_losses(v, w, label, {}, {}, cfg);
  REQUIRE(rep.class_loss == Approx(std::log(static_cast<double>(cfg.n))).margin(1e-9));
  double entropy = 0.0;
  for (const double wt : label.w_target) entropy -= wt * std::log(wt);
  REQUIRE(rep.reg_loss == Approx(entropy).margin(1e-12));
  REQUIRE(rep.total_loss == Approx(rep.class_loss + cfg.mu * rep.reg_loss).margin(1e-12));
}

TEST_CASE("class loss is bounded below by the target entropy", "[codec]") {
  const AttitudeCodebook book = build_codebook(32, 0xE28);
  SplitMix64 rng(74);
  AttitudeConfig cfg;
  cfg.m = book.m;
  cfg.n = 4;
  cfg.lambda = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const AttitudeLabel label = make_label(book, testutil::random_quaternion(rng), cfg.n);
    std::vector<double> v(book.m), w(book.m);
    for (double& x : v) x = 2.0 * rng.next_normal();
    for (double& x : w) x = 2.0 * rng.next_normal();
    const AttitudeLossReport rep = attitude_losses(v, w, label, {}, {}, cfg);
    REQUIRE(rep.class_loss >= std::log(static_cast<double>(cfg.n)) - 1e-12);
    REQUIRE(rep.reg_loss >= 0.0);
  }
}

TEST_CASE("loss gradients match central finite differences", "[codec]") {
  const AttitudeCodebook book = build_codebook(24, 0xE29);
  SplitMix64 rng(75);
  AttitudeConfig cfg;
  cfg.m = book.m;
  cfg.n = 3;
  cfg.lambda = 2e-3;
  cfg.mu = 0.6;
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const AttitudeLabel label = make_label(book, testutil::random_quaternion(rng), cfg.n);
    std::vector<double> v(book.m), w(book.m), tc(5), tr(5);
    for (double& x : v) x = 2.0 * rng.next_normal();
    for (double& x : w) x = 2.0 * rng.next_normal();
    for (double& x : tc) x = rng.next_normal();
    for (double& x : tr) x = rng.next_normal();
    const AttitudeLossReport rep = attitude_losses(v, w, label, tc, tr, cfg);

    const auto probe = [&](double* slot, int which) {
      const double saved = *slot;
      *slot = saved + h;
      const AttitudeLossReport hi = attitude_losses(v, w, label, tc, tr, cfg);
      *slot = saved - h;
      const AttitudeLossReport lo = attitude_losses(v, w, label, tc, tr, cfg);
      *slot = saved;
      const auto pick = [which](const AttitudeLossReport& r) {
        return which == 0 ? r.class_loss : which == 1 ? r.reg_loss : r.total_loss;
      };
      return (pick(hi) - pick(lo)) / (2 * h);
    };

    for (int j = 0; j < book.m; ++j) {
      REQUIRE(testutil::gradient_close(rep.grad_v[j], probe(&v[j], 0)));
      REQUIRE(testutil::gradient_close(rep.grad_v[j], probe(&v[j], 2)));  // total shares it
      REQUIRE(testutil::gradient_close(rep.grad_w_reg[j], probe(&w[j], 1)));
      REQUIRE(testutil::gradient_close(cfg.mu * rep.grad_w_reg[j], probe(&w[j], 2)));
    }
    for (int j = 0; j < 5; ++j) {
      REQUIRE(testutil::gradient_close(rep.grad_theta_cls[j], probe(&tc[j], 0)));
      REQUIRE(testutil::gradient_close(rep.grad_theta_reg[j], probe(&tr[j], 1)));
      REQUIRE(testutil::gradient_close(cfg.mu * rep.grad_theta_reg[j], probe(&tr[j], 2)));
    }
  }
}

TEST_CASE("losses validate their inputs", "[codec]") {
  const AttitudeCodebook book = build_codebook(16, 0xE30);
  AttitudeConfig cfg;
  cfg.m = book.m;
  cfg.n = 3;
  const AttitudeLabel label = make_label(book, UnitQuaternion{}, 3);
  std::vector<double> v(book.m, 0.0), w(book.m, 0.0);
  REQUIRE_THROWS_AS(attitude_losses(std::vector<double>(8, 0.0), w, label, {}, {}, cfg),
                    InvalidInput);
  AttitudeConfig wrong_n = cfg;
  wrong_n.n = 5;
  REQUIRE_THROWS_AS(attitude_losses(v, w, label, {}, {}, wrong_n), InvalidInput);
}

TEST_CASE("decode returns the dominant class and averages pairs", "[codec]") {
  const AttitudeCodebook book = build_codebook(40, 0xD2C0DE);
  std::vector<double> v(book.m, 0.0), w(book.m, 0.0);
  v[23] = 40.0;
  const DecodedAttitude one = decode_attitude(v, w, book, 1);
  REQUIRE(one.omega == std::vector<int>{23});
  REQUIRE(testutil::same_rotation(one.q, book.quats[23], 1e-12));

  // Two selected classes with equal weights reduce to the plain average.
  std::fill(v.begin(), v.end(), 0.0);
  v[5] = 30.0;
  v[9] = 30.0;
  const DecodedAttitude two = decode_attitude(v, w, book, 2);
  REQUIRE(two.omega == std::vector<int>{5, 9});
  REQUIRE(two.gamma[0] == Approx(0.5).margin(1e-12));
  const UnitQuaternion expected = weighted_average({book.quats[5], book.quats[9]}, {0.5, 0.5});
  REQUIRE(testutil::same_rotation(two.q, expected, 1e-12));
}

TEST_CASE("decode ties resolve to the lower class index", "[codec]") {
  const AttitudeCodebook book = build_codebook(10, 0xD2C1DE);
  const std::vector<double> v(book.m, 1.0), w(book.m, 0.0);  // all tied
  const DecodedAttitude dec = decode_attitude(v, w, book, 3);
  REQUIRE(dec.omega == std::vector<int>{0, 1, 2});
}

TEST_CASE("oracle labels decode within the labeled gap bound", "[codec]") {
  const AttitudeCodebook book = build_codebook(1000, 0x600D0001);
  SplitMix64 rng(76);
  AttitudeConfig cfg;
  cfg.m = book.m;
  cfg.n = 5;
  for (int trial = 0; trial < 100; ++trial) {
    const UnitQuaternion q_true = testutil::random_quaternion(rng);
    const AttitudeLabel label = make_label(book, q_true, cfg.n);
    std::vector<double> v(book.m, -30.0), w(book.m, -30.0);
    for (std::size_t j = 0; j < label.omega.size(); ++j) {
      v[label.omega[j]] = std::log(1.0 / cfg.n);
      w[label.omega[j]] = std::log(label.w_target[j]);
    }
    const DecodedAttitude dec = decode_attitude(v, w, book, cfg.n);
    const double err = angular_distance(dec.q, q_true);
    REQUIRE(err <= label.alphas.back() + 1e-12);
  }
}

TEST_CASE("labeled nearest-class gap matches a brute-force scan", "[codec]") {
  // Independent oracle: nearest distance via the rotation-matrix trace.
  const AttitudeCodebook book = build_codebook(1000, 0x600D0002);
  SplitMix64 rng(77);
  double mean_label = 0.0, mean_scan = 0.0;
  const int trials = 200;
  for (int trial = 0; trial < trials; ++trial) {
    const UnitQuaternion q = testutil::random_quaternion(rng);
    mean_label += make_label(book, q, 1).alphas[0];
    const Mat3 rq = to_rotation_matrix(q).mat();
    double best = kPi;
    for (const UnitQuaternion& c : book.quats)
      best = std::min(best, testutil::angle_between_matrices(rq, to_rotation_matrix(c).mat()));
    mean_scan += best;
  }
  mean_label /= trials;
  mean_scan /= trials;
  REQUIRE(std::abs(mean_label - mean_scan) / mean_scan < 0.05);
}
