#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "spnkit/error.hpp"
#include "spnkit/quaternion.hpp"
#include "spnkit/quaternion_average.hpp"
#include "spnkit/rotation_sampling.hpp"
#include "spnkit/text_io.hpp"

namespace spnkit {

struct AttitudeConfig {
  int m = 1000;          // number of attitude classes
  int n = 5;             // classes used per label
  double lambda = 1e-4;  // L2 regularization strength
  double mu = 1.0;       // weight of the regression loss in the total

  void validate() const {
    if (n < 1 || n > m) throw InvalidInput("attitude config requires 1 <= n <= m");
    if (!(lambda >= 0.0)) throw InvalidInput("lambda must be non-negative");
    if (!(mu > 0.0)) throw InvalidInput("mu must be positive");
  }
};

/// How a class's angular gap alpha maps into its target weight numerator
/// 1 - f(alpha). Both keep weights positive for alpha in [0, pi).
enum class GapWeighting {
  kAlphaOverPiSquared,   // f = alpha / pi^2 (default)
  kAlphaOverPiAllSquared // f = (alpha / pi)^2
};

/// Fixed discretization of the rotation space: m Haar-uniform unit
/// quaternions, regenerated bit-identically from (m, seed).
struct AttitudeCodebook {
  std::vector<UnitQuaternion> quats;
  int m = 0;
  std::uint64_t seed = 0;
};

inline AttitudeCodebook build_codebook(int m, std::uint64_t seed) {
  if (m < 2) throw InvalidInput("codebook needs at least 2 classes");
  return {sample_uniform_rotations(static_cast<std::size_t>(m), seed), m, seed};
}

inline std::string serialize_codebook(const AttitudeCodebook& book) {
  std::ostringstream out;
  out << "spnkit-codebook m=" << book.m << " seed=" << book.seed
      << " order=index-w-x-y-z components=subgroup(s1r1,c1r1,s2r2,c2r2)->(x,y,z,w)\n";
  for (int i = 0; i < book.m; ++i) {
    const UnitQuaternion& q = book.quats[static_cast<std::size_t>(i)];
    out << i << ' ' << format_g17(q.w()) << ' ' << format_g17(q.x()) << ' '
        << format_g17(q.y()) << ' ' << format_g17(q.z()) << "\n";
  }
  return out.str();
}

inline void save_codebook(const AttitudeCodebook& book, const std::filesystem::path& path) {
  write_file(path, serialize_codebook(book));
}

inline std::uint64_t codebook_hash(const AttitudeCodebook& book) {
  return fnv1a64(serialize_codebook(book));
}

inline AttitudeCodebook load_codebook(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open codebook " + path.string());
  std::string header;
  if (!std::getline(in, header)) throw ParseError(path.string() + ": empty codebook");
  const auto toks = split_ws(header);
  if (toks.empty() || toks[0] != "spnkit-codebook")
    throw ParseError(path.string() + ": not a codebook file");
  AttitudeCodebook book;
  for (const std::string& tok : toks) {
    if (tok.rfind("m=", 0) == 0) book.m = static_cast<int>(parse_int(tok.substr(2), path.string()));
    if (tok.rfind("seed=", 0) == 0)
      book.seed = parse_uint(tok.substr(5), path.string());
  }
  if (book.m < 2) throw ParseError(path.string() + ": bad class count in header");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_ws(line);
    if (f.size() != 5) throw ParseError(path.string() + ": malformed row '" + line + "'");
    book.quats.emplace_back(parse_double(f[1], path.string()), parse_double(f[2], path.string()),
                            parse_double(f[3], path.string()), parse_double(f[4], path.string()));
  }
  if (static_cast<int>(book.quats.size()) != book.m)
    throw ParseError(path.string() + ": row count does not match header");
  return book;
}

/// Ground-truth targets for one attitude: the n nearest classes (ascending
/// angular gap, ties to the lower index), the gaps themselves, and the
/// regression weights
///   w_j = (1 - f(alpha_j)) / (n - sum_k f(alpha_k)),
/// which sum to one and decrease as the gap grows. The classification
/// target is implicit: probability 1/n on each entry of omega, zero
/// elsewhere (dense_class_target materializes it).
struct AttitudeLabel {
  std::vector<int> omega;       // n class indices
  std::vector<double> alphas;   // matching angular gaps, radians
  std::vector<double> w_target; // matching regression weights

  int n() const { return static_cast<int>(omega.size()); }

  std::vector<double> dense_class_target(int m) const {
    std::vector<double> v(static_cast<std::size_t>(m), 0.0);
    for (const int idx : omega) v[static_cast<std::size_t>(idx)] = 1.0 / n();
    return v;
  }
};

inline double gap_weight_numerator(double alpha, GapWeighting rule) {
  const double pi = std::numbers::pi;
  return rule == GapWeighting::kAlphaOverPiSquared ? 1.0 - alpha / (pi * pi)
                                                   : 1.0 - (alpha / pi) * (alpha / pi);
}

inline AttitudeLabel make_label(const AttitudeCodebook& book, const UnitQuaternion& q_true, int n,
                                GapWeighting rule = GapWeighting::kAlphaOverPiSquared) {
  if (n < 1 || n > book.m) throw InvalidInput("label size n must satisfy 1 <= n <= m");
  std::vector<std::pair<double, int>> gaps;
  gaps.reserve(static_cast<std::size_t>(book.m));
  for (int i = 0; i < book.m; ++i)
    gaps.emplace_back(angular_distance(book.quats[static_cast<std::size_t>(i)], q_true), i);
  std::partial_sort(gaps.begin(), gaps.begin() + n, gaps.end());

  AttitudeLabel label;
  double denom = static_cast<double>(n);
  for (int j = 0; j < n; ++j) {
    label.omega.push_back(gaps[static_cast<std::size_t>(j)].second);
    label.alphas.push_back(gaps[static_cast<std::size_t>(j)].first);
    denom -= (1.0 - gap_weight_numerator(label.alphas.back(), rule));
  }
  for (int j = 0; j < n; ++j)
    label.w_target.push_back(gap_weight_numerator(label.alphas[static_cast<std::size_t>(j)], rule) / denom);
  return label;
}

/// Numerically stable softmax (max-subtracted).
inline std::vector<double> softmax(std::span<const double> x) {
  if (x.empty()) throw InvalidInput("softmax of empty vector");
  double hi = x[0];
  for (const double v : x) {
    if (!std::isfinite(v)) throw InvalidInput("softmax input must be finite");
    hi = std::max(hi, v);
  }
  std::vector<double> out(x.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - hi);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

/// Softmax over a subset of indices; all other entries are exactly zero, so
/// the output sums to one over the support.
inline std::vector<double> softmax_over(std::span<const double> x, std::span<const int> support) {
  if (support.empty()) throw InvalidInput("softmax support must not be empty");
  double hi = x[static_cast<std::size_t>(support[0])];
  for (const int idx : support) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= x.size())
      throw InvalidInput("softmax support index out of range");
    if (!std::isfinite(x[static_cast<std::size_t>(idx)])) throw InvalidInput("softmax input must be finite");
    hi = std::max(hi, x[static_cast<std::size_t>(idx)]);
  }
  std::vector<double> out(x.size(), 0.0);
  double sum = 0.0;
  for (const int idx : support) {
    out[static_cast<std::size_t>(idx)] = std::exp(x[static_cast<std::size_t>(idx)] - hi);
    sum += out[static_cast<std::size_t>(idx)];
  }
  for (const int idx : support) out[static_cast<std::size_t>(idx)] /= sum;
  return out;
}

/// Losses and analytic gradients for one sample.
///
/// class_loss = -sum_j vtilde_j log softmax(v)_j + lambda |theta_cls|^2
/// reg_loss   = -sum_{j in omega} wtilde_j log softmax(w|omega)_j + lambda |theta_reg|^2
/// total_loss = class_loss + mu * reg_loss
///
/// Gradients of the total follow from the parts: d(total)/dv = grad_v,
/// d(total)/dw = mu * grad_w_reg, d(total)/dtheta_reg = mu * grad_theta_reg.
struct AttitudeLossReport {
  double class_loss = 0.0;
  double reg_loss = 0.0;
  double total_loss = 0.0;
  std::vector<double> grad_v;          // d(class_loss)/dv, length m
  std::vector<double> grad_w_reg;      // d(reg_loss)/dw, length m, zero off-support
  std::vector<double> grad_theta_cls;  // d(class_loss)/dtheta_cls = 2 lambda theta_cls
  std::vector<double> grad_theta_reg;  // d(reg_loss)/dtheta_reg = 2 lambda theta_reg
};

inline AttitudeLossReport attitude_losses(std::span<const double> v, std::span<const double> w,
                                          const AttitudeLabel& label,
                                          std::span<const double> theta_cls,
                                          std::span<const double> theta_reg,
                                          const AttitudeConfig& cfg) {
  cfg.validate();
  if (static_cast<int>(v.size()) != cfg.m || static_cast<int>(w.size()) != cfg.m)
    throw InvalidInput("logit vectors must have length m");
  if (label.n() != cfg.n) throw InvalidInput("label width does not match config n");
  for (const int idx : label.omega)
    if (idx < 0 || idx >= cfg.m) throw InvalidInput("label class index out of range");

  AttitudeLossReport rep;

  // Classification branch: cross-entropy of the full softmax against the
  // uniform-on-omega target, computed through log-sum-exp for stability.
  double hi = v[0];
  for (const double x : v) hi = std::max(hi, x);
  double lse = 0.0;
  for (const double x : v) lse += std::exp(x - hi);
  lse = hi + std::log(lse);
  const double vtilde = 1.0 / label.n();
  for (std::size_t j = 0; j < label.omega.size(); ++j)
    rep.class_loss -= vtilde * (v[static_cast<std::size_t>(label.omega[j])] - lse);

  rep.grad_v = softmax(v);
  for (const int idx : label.omega) rep.grad_v[static_cast<std::size_t>(idx)] -= vtilde;

  // Regression branch: cross-entropy of the support-restricted softmax
  // against the gap-based weights.
  const std::vector<double> sw = softmax_over(w, label.omega);
  rep.grad_w_reg.assign(w.size(), 0.0);
  for (std::size_t j = 0; j < label.omega.size(); ++j) {
    const std::size_t idx = static_cast<std::size_t>(label.omega[j]);
    rep.reg_loss -= label.w_target[j] * std::log(sw[idx]);
    rep.grad_w_reg[idx] = sw[idx] - label.w_target[j];
  }

  for (const double t : theta_cls) {
    rep.class_loss += cfg.lambda * t * t;
    rep.grad_theta_cls.push_back(2.0 * cfg.lambda * t);
  }
  for (const double t : theta_reg) {
    rep.reg_loss += cfg.lambda * t * t;
    rep.grad_theta_reg.push_back(2.0 * cfg.lambda * t);
  }

  rep.total_loss = rep.class_loss + cfg.mu * rep.reg_loss;
  return rep;
}

struct DecodedAttitude {
  UnitQuaternion q;
  std::vector<int> omega;     // top-n classes by class probability
  std::vector<double> gamma;  // matching averaging weights, sum to one
};

/// Inference path: the n most probable classes under softmax(v), weighted by
/// the support-restricted softmax of w, fused by the Markley average. Tie on
/// class probability resolves to the lower index, so decoding is a pure
/// function of its inputs.
inline DecodedAttitude decode_attitude(std::span<const double> v, std::span<const double> w,
                                       const AttitudeCodebook& book, int n) {
  if (static_cast<int>(v.size()) != book.m || static_cast<int>(w.size()) != book.m)
    throw InvalidInput("logit vectors must have length m");
  if (n < 1 || n > book.m) throw InvalidInput("decode requires 1 <= n <= m");

  const std::vector<double> probs = softmax(v);
  std::vector<int> order(static_cast<std::size_t>(book.m));
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + n, order.end(), [&probs](int a, int b) {
    if (probs[static_cast<std::size_t>(a)] != probs[static_cast<std::size_t>(b)])
      return probs[static_cast<std::size_t>(a)] > probs[static_cast<std::size_t>(b)];
    return a < b;
  });

  DecodedAttitude out;
  out.omega.assign(order.begin(), order.begin() + n);
  const std::vector<double> sw = softmax_over(w, out.omega);
  std::vector<UnitQuaternion> quats;
  for (const int idx : out.omega) {
    quats.push_back(book.quats[static_cast<std::size_t>(idx)]);
    out.gamma.push_back(sw[static_cast<std::size_t>(idx)]);
  }
  out.q = weighted_average(quats, out.gamma);
  return out;
}

}  // namespace spnkit
