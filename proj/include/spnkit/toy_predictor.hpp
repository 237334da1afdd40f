#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "spnkit/attitude_codec.hpp"
#include "spnkit/camera.hpp"
#include "spnkit/error.hpp"
#include "spnkit/quaternion.hpp"
#include "spnkit/rng.hpp"
#include "spnkit/scene_generator.hpp"
#include "spnkit/text_io.hpp"
#include "spnkit/wireframe.hpp"

namespace spnkit {

/// Box-normalized occupancy grid standing in for the image crop: cell
/// (row, col) is 1 when any projected vertex or edge sample lands in it.
struct FeatureVector {
  int grid = 0;
  std::vector<double> values;  // grid*grid entries, row-major, each 0 or 1
};

constexpr int kEdgeSamplesPerEdge = 32;

/// Projects every vertex plus 32 evenly spaced 3D samples per edge
/// (endpoints included) and marks the grid cells they hit after normalizing
/// image coordinates into the box. Hits outside the box are ignored; hits on
/// the far box edge land in the last cell.
inline FeatureVector silhouette_features(const PinholeCamera& cam, const Pose& pose,
                                         const WireframeModel& model, const BoundingBox& box,
                                         int grid) {
  if (grid < 1) throw InvalidInput("feature grid must be at least 1");
  if (!(box.area() > 0.0)) throw InvalidInput("feature box must have positive area");
  FeatureVector f{grid, std::vector<double>(static_cast<std::size_t>(grid) * grid, 0.0)};
  const RotationMatrix rot = to_rotation_matrix(pose.q);

  const auto mark = [&](const Vec3& body_point) {
    const ProjectedPoint p = project_point(cam, rot, pose.t, body_point);
    const double fu = (p.u - box.left) / box.width();
    const double fv = (p.v - box.top) / box.height();
    if (fu < 0.0 || fu > 1.0 || fv < 0.0 || fv > 1.0) return;
    const int col = std::min(grid - 1, static_cast<int>(fu * grid));
    const int row = std::min(grid - 1, static_cast<int>(fv * grid));
    f.values[static_cast<std::size_t>(row) * grid + col] = 1.0;
  };

  for (const Vec3& v : model.vertices) mark(v);
  for (const auto& [i, j] : model.edges) {
    const Vec3& a = model.vertices[static_cast<std::size_t>(i)];
    const Vec3& b = model.vertices[static_cast<std::size_t>(j)];
    for (int k = 0; k < kEdgeSamplesPerEdge; ++k) {
      const double s = static_cast<double>(k) / (kEdgeSamplesPerEdge - 1);
      mark(a + (b - a) * s);
    }
  }
  return f;
}

/// One affine layer per branch over the occupancy features; the softmax that
/// turns these logits into distributions is applied downstream.
struct ToyModel {
  int m = 0;
  int grid = 0;
  std::uint64_t seed = 0;
  long long steps_trained = 0;
  double final_train_loss = 0.0;
  std::vector<double> w_cls;  // m x grid^2, row-major
  std::vector<double> b_cls;  // m
  std::vector<double> w_reg;  // m x grid^2, row-major
  std::vector<double> b_reg;  // m
};

struct ToyLogits {
  std::vector<double> v;
  std::vector<double> w;
};

inline ToyLogits predict(const ToyModel& model, const FeatureVector& f) {
  const std::size_t dim = static_cast<std::size_t>(model.grid) * model.grid;
  if (f.grid != model.grid || f.values.size() != dim)
    throw InvalidInput("feature vector does not match the model grid");
  ToyLogits out{model.b_cls, model.b_reg};
  for (int j = 0; j < model.m; ++j) {
    const std::size_t row = static_cast<std::size_t>(j) * dim;
    double sc = 0.0, sr = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      sc += model.w_cls[row + k] * f.values[k];
      sr += model.w_reg[row + k] * f.values[k];
    }
    out.v[static_cast<std::size_t>(j)] += sc;
    out.w[static_cast<std::size_t>(j)] += sr;
  }
  return out;
}

struct ToyTrainConfig {
  int epochs = 10;
  std::uint64_t seed = 0;
  int grid = 16;
  int batch_size = 16;
  double lr_initial = 0.003;
  double lr_decay = 0.95;
  long long lr_decay_every = 1000;  // steps
  double lambda = 1e-4;
  double mu = 1.0;
};

/// lr(step) = lr_initial * lr_decay^floor(step / lr_decay_every).
inline double learning_rate(const ToyTrainConfig& cfg, long long step) {
  return cfg.lr_initial * std::pow(cfg.lr_decay, static_cast<double>(step / cfg.lr_decay_every));
}

/// Validation membership by deterministic hash of the decimal record id:
/// one record in five validates.
inline bool is_validation_id(long long id) {
  return fnv1a64(std::to_string(id)) % 5 == 0;
}

struct ToyTrainResult {
  ToyModel model;
  double initial_train_loss = 0.0;
  std::vector<double> train_loss;  // mean total loss over the train split, per epoch
  std::vector<double> val_loss;    // same over the validation split (may be empty)
};

namespace detail {

struct ToyBatchGradient {
  std::vector<double> w_cls, b_cls, w_reg, b_reg;  // d(mean CE total)/d(param)
  double mean_ce_total = 0.0;
};

/// Mean cross-entropy gradient of the total loss over the given records.
/// The quadratic L2 term is handled separately by the update rule.
inline ToyBatchGradient toy_ce_gradient(const ToyModel& model,
                                        const std::vector<FeatureVector>& features,
                                        const std::vector<const AttitudeLabel*>& labels,
                                        std::span<const std::size_t> batch,
                                        const AttitudeConfig& loss_cfg) {
  const std::size_t dim = static_cast<std::size_t>(model.grid) * model.grid;
  ToyBatchGradient g;
  g.w_cls.assign(model.w_cls.size(), 0.0);
  g.b_cls.assign(model.b_cls.size(), 0.0);
  g.w_reg.assign(model.w_reg.size(), 0.0);
  g.b_reg.assign(model.b_reg.size(), 0.0);

  AttitudeConfig ce_cfg = loss_cfg;
  ce_cfg.lambda = 0.0;  // quadratic term excluded here
  for (const std::size_t idx : batch) {
    const FeatureVector& f = features[idx];
    const ToyLogits logits = predict(model, f);
    const AttitudeLossReport rep =
        attitude_losses(logits.v, logits.w, *labels[idx], {}, {}, ce_cfg);
    g.mean_ce_total += rep.total_loss;
    for (int j = 0; j < model.m; ++j) {
      const std::size_t row = static_cast<std::size_t>(j) * dim;
      const double dv = rep.grad_v[static_cast<std::size_t>(j)];
      const double dw = loss_cfg.mu * rep.grad_w_reg[static_cast<std::size_t>(j)];
      g.b_cls[static_cast<std::size_t>(j)] += dv;
      g.b_reg[static_cast<std::size_t>(j)] += dw;
      if (dv != 0.0 || dw != 0.0)
        for (std::size_t k = 0; k < dim; ++k)
          if (f.values[k] != 0.0) {
            g.w_cls[row + k] += dv * f.values[k];
            g.w_reg[row + k] += dw * f.values[k];
          }
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  g.mean_ce_total *= inv;
  for (auto* vec : {&g.w_cls, &g.b_cls, &g.w_reg, &g.b_reg})
    for (double& x : *vec) x *= inv;
  return g;
}

inline double l2_norm_sq(std::span<const double> v) {
  double s = 0.0;
  for (const double x : v) s += x * x;
  return s;
}

/// Full objective over a set of records: mean CE total plus the L2 terms.
inline double toy_objective(const ToyModel& model, const std::vector<FeatureVector>& features,
                            const std::vector<const AttitudeLabel*>& labels,
                            std::span<const std::size_t> subset, const AttitudeConfig& loss_cfg) {
  AttitudeConfig ce_cfg = loss_cfg;
  ce_cfg.lambda = 0.0;
  double sum = 0.0;
  for (const std::size_t idx : subset) {
    const ToyLogits logits = predict(model, features[idx]);
    sum += attitude_losses(logits.v, logits.w, *labels[idx], {}, {}, ce_cfg).total_loss;
  }
  return sum / static_cast<double>(subset.size()) +
         loss_cfg.lambda * l2_norm_sq(model.w_cls) +
         loss_cfg.mu * loss_cfg.lambda * l2_norm_sq(model.w_reg);
}

/// Central-difference check of the analytic batch gradient on a handful of
/// deterministic coordinates. Runs once before training starts; a mismatch
/// beyond 1e-5 relative aborts the run.
inline void toy_gradient_selfcheck(ToyModel model, const std::vector<FeatureVector>& features,
                                   const std::vector<const AttitudeLabel*>& labels,
                                   std::span<const std::size_t> subset,
                                   const AttitudeConfig& loss_cfg, std::uint64_t seed) {
  // Check from a generic point: small deterministic pseudo-random parameters.
  SplitMix64 rng = stream_for(seed, 0x5e1fc3ccull);
  for (auto* vec : {&model.w_cls, &model.b_cls, &model.w_reg, &model.b_reg})
    for (double& x : *vec) x = 0.1 * (rng.next_unit() - 0.5);

  // Keep the quadratic term comparable to the cross-entropy term, otherwise
  // extreme lambdas push the objective so high that central differences
  // quantize to a few ulps.
  const double reg_mag = loss_cfg.lambda * l2_norm_sq(model.w_cls) +
                         loss_cfg.mu * loss_cfg.lambda * l2_norm_sq(model.w_reg);
  if (reg_mag > 1.0) {
    const double scale = 1.0 / std::sqrt(reg_mag);
    for (auto* vec : {&model.w_cls, &model.b_cls, &model.w_reg, &model.b_reg})
      for (double& x : *vec) x *= scale;
  }

  const ToyBatchGradient g = toy_ce_gradient(model, features, labels, subset, loss_cfg);
  const auto analytic = [&](const std::vector<double>* block, std::size_t k) {
    if (block == &model.w_cls) return g.w_cls[k] + 2.0 * loss_cfg.lambda * model.w_cls[k];
    if (block == &model.b_cls) return g.b_cls[k];
    if (block == &model.w_reg)
      return g.w_reg[k] + 2.0 * loss_cfg.mu * loss_cfg.lambda * model.w_reg[k];
    return g.b_reg[k];
  };

  const double h = 1e-6;
  for (auto* block : {&model.w_cls, &model.b_cls, &model.w_reg, &model.b_reg}) {
    for (int probe = 0; probe < 6; ++probe) {
      const std::size_t k = static_cast<std::size_t>(rng.next_u64() % block->size());
      const double saved = (*block)[k];
      (*block)[k] = saved + h;
      const double hi = toy_objective(model, features, labels, subset, loss_cfg);
      (*block)[k] = saved - h;
      const double lo = toy_objective(model, features, labels, subset, loss_cfg);
      (*block)[k] = saved;
      const double fd = (hi - lo) / (2.0 * h);
      const double an = analytic(block, k);
      const double scale = std::max({std::abs(an), std::abs(fd), 1e-4});
      if (std::abs(an - fd) > 1e-5 * scale)
        throw Error("gradient self-check failed: analytic " + format_g17(an) +
                    " vs finite-difference " + format_g17(fd));
    }
  }
}

}  // namespace detail

/// Trains the two affine branches by stochastic gradient descent over the
/// total loss. The cross-entropy term takes an explicit step; the quadratic
/// L2 term is applied as its exact proximal shrink 1/(1 + 2*lambda*lr) so
/// the update stays stable for any regularization strength. Biases are not
/// regularized. Parameters start at zero and the whole routine is
/// single-threaded, so a fixed seed reproduces the trained model bit for
/// bit.
inline ToyTrainResult train_toy(const Dataset& dataset, const AttitudeCodebook& book,
                                const ToyTrainConfig& cfg) {
  if (dataset.records.empty()) throw InvalidInput("cannot train on an empty dataset");
  if (dataset.cfg.n > book.m) throw InvalidInput("codebook smaller than the dataset label width");
  if (to_hex(codebook_hash(book)) != dataset.codebook_hash_hex)
    throw InvalidInput("codebook does not match the one the dataset was labeled with");
  for (const SceneRecord& r : dataset.records)
    for (const int idx : r.label.omega)
      if (idx >= book.m) throw InvalidInput("dataset label indexes a class beyond the codebook");

  const WireframeModel model3d = resolve_model(dataset.cfg.model);
  const std::size_t dim = static_cast<std::size_t>(cfg.grid) * cfg.grid;

  std::vector<FeatureVector> features;
  std::vector<const AttitudeLabel*> labels;
  features.reserve(dataset.records.size());
  for (const SceneRecord& r : dataset.records) {
    features.push_back(silhouette_features(dataset.cam, r.pose, model3d, r.box, cfg.grid));
    labels.push_back(&r.label);
  }

  std::vector<std::size_t> train_idx, val_idx;
  for (std::size_t i = 0; i < dataset.records.size(); ++i)
    (is_validation_id(dataset.records[i].id) ? val_idx : train_idx).push_back(i);
  if (train_idx.empty()) train_idx = val_idx;  // degenerate split on tiny datasets

  AttitudeConfig loss_cfg;
  loss_cfg.m = book.m;
  loss_cfg.n = dataset.cfg.n;
  loss_cfg.lambda = cfg.lambda;
  loss_cfg.mu = cfg.mu;
  loss_cfg.validate();

  ToyTrainResult result;
  ToyModel& model = result.model;
  model.m = book.m;
  model.grid = cfg.grid;
  model.seed = cfg.seed;
  model.w_cls.assign(static_cast<std::size_t>(book.m) * dim, 0.0);
  model.b_cls.assign(static_cast<std::size_t>(book.m), 0.0);
  model.w_reg.assign(static_cast<std::size_t>(book.m) * dim, 0.0);
  model.b_reg.assign(static_cast<std::size_t>(book.m), 0.0);

  {
    const std::size_t probe = std::min<std::size_t>(5, train_idx.size());
    detail::toy_gradient_selfcheck(model, features, labels,
                                   std::span<const std::size_t>(train_idx.data(), probe),
                                   loss_cfg, cfg.seed);
  }

  result.initial_train_loss = detail::toy_objective(model, features, labels, train_idx, loss_cfg);

  long long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates shuffle from the epoch's own stream.
    std::vector<std::size_t> order = train_idx;
    SplitMix64 shuffle_rng = stream_for(cfg.seed, static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.next_u64() % i]);

    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t len = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size),
                                                    order.size() - start);
      const auto batch = std::span<const std::size_t>(order.data() + start, len);
      const detail::ToyBatchGradient g = detail::toy_ce_gradient(model, features, labels, batch, loss_cfg);
      const double lr = learning_rate(cfg, step);
      const double shrink_cls = 1.0 / (1.0 + 2.0 * cfg.lambda * lr);
      const double shrink_reg = 1.0 / (1.0 + 2.0 * cfg.mu * cfg.lambda * lr);
      for (std::size_t k = 0; k < model.w_cls.size(); ++k)
        model.w_cls[k] = (model.w_cls[k] - lr * g.w_cls[k]) * shrink_cls;
      for (std::size_t k = 0; k < model.b_cls.size(); ++k) model.b_cls[k] -= lr * g.b_cls[k];
      for (std::size_t k = 0; k < model.w_reg.size(); ++k)
        model.w_reg[k] = (model.w_reg[k] - lr * g.w_reg[k]) * shrink_reg;
      for (std::size_t k = 0; k < model.b_reg.size(); ++k) model.b_reg[k] -= lr * g.b_reg[k];
      ++step;
    }

    result.train_loss.push_back(detail::toy_objective(model, features, labels, train_idx, loss_cfg));
    if (!val_idx.empty())
      result.val_loss.push_back(detail::toy_objective(model, features, labels, val_idx, loss_cfg));
  }

  model.steps_trained = step;
  model.final_train_loss = result.train_loss.empty() ? result.initial_train_loss : result.train_loss.back();
  return result;
}

inline std::string serialize_toy_model(const ToyModel& model) {
  std::ostringstream out;
  out << "spnkit-toy-model m=" << model.m << " grid=" << model.grid << " seed=" << model.seed
      << " steps=" << model.steps_trained << " final_loss=" << format_g17(model.final_train_loss)
      << "\n";
  const auto dump = [&out](const char* tag, const std::vector<double>& vals) {
    out << tag << ' ' << vals.size() << "\n";
    for (std::size_t i = 0; i < vals.size(); ++i)
      out << format_g17(vals[i]) << (i + 1 == vals.size() ? "\n" : " ");
  };
  dump("W_cls", model.w_cls);
  dump("b_cls", model.b_cls);
  dump("W_reg", model.w_reg);
  dump("b_reg", model.b_reg);
  return out.str();
}

inline void save_toy_model(const ToyModel& model, const std::filesystem::path& path) {
  write_file(path, serialize_toy_model(model));
}

inline ToyModel load_toy_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open toy model " + path.string());
  std::string header;
  if (!std::getline(in, header)) throw ParseError(path.string() + ": empty model file");
  const auto toks = split_ws(header);
  if (toks.empty() || toks[0] != "spnkit-toy-model")
    throw ParseError(path.string() + ": not a toy model file");
  ToyModel model;
  for (const std::string& tok : toks) {
    if (tok.rfind("m=", 0) == 0) model.m = static_cast<int>(parse_int(tok.substr(2), path.string()));
    if (tok.rfind("grid=", 0) == 0)
      model.grid = static_cast<int>(parse_int(tok.substr(5), path.string()));
    if (tok.rfind("seed=", 0) == 0)
      model.seed = parse_uint(tok.substr(5), path.string());
    if (tok.rfind("steps=", 0) == 0) model.steps_trained = parse_int(tok.substr(6), path.string());
    if (tok.rfind("final_loss=", 0) == 0)
      model.final_train_loss = parse_double(tok.substr(11), path.string());
  }
  const auto read_block = [&](const char* tag, std::vector<double>& into) {
    std::string name;
    std::size_t count = 0;
    if (!(in >> name >> count) || name != tag)
      throw ParseError(path.string() + ": expected block '" + tag + "'");
    into.resize(count);
    for (double& v : into)
      if (!(in >> v)) throw ParseError(path.string() + ": truncated block '" + tag + "'");
  };
  read_block("W_cls", model.w_cls);
  read_block("b_cls", model.b_cls);
  read_block("W_reg", model.w_reg);
  read_block("b_reg", model.b_reg);
  const std::size_t dim = static_cast<std::size_t>(model.grid) * model.grid;
  if (model.m < 1 || model.grid < 1 ||
      model.w_cls.size() != static_cast<std::size_t>(model.m) * dim ||
      model.w_reg.size() != static_cast<std::size_t>(model.m) * dim ||
      model.b_cls.size() != static_cast<std::size_t>(model.m) ||
      model.b_reg.size() != static_cast<std::size_t>(model.m))
    throw ParseError(path.string() + ": inconsistent dimensions");
  return model;
}

struct OraclePrediction {
  BoundingBox box;
  std::vector<double> v;  // class logits
  std::vector<double> w;  // weight logits
};

constexpr double kOracleLogitFloor = -30.0;  // keeps off-support softmax mass below 1e-9

/// Noise-controlled stand-in for a learned predictor, used to exercise the
/// decoder and solver in isolation. The box edges get i.i.d. uniform
/// +-sigma_box noise; the attitude is the truth composed with a rotation of
/// angle |N(0, sigma_att)| about a uniform random axis; the logits are the
/// log of the label targets built for that perturbed attitude, floored for
/// the zero entries. Draws come from the stream seed ^ record id.
inline OraclePrediction oracle_predictor(const SceneRecord& truth, const AttitudeCodebook& book,
                                         double sigma_att_rad, double sigma_box_px,
                                         std::uint64_t seed, int n,
                                         GapWeighting weighting = GapWeighting::kAlphaOverPiSquared) {
  SplitMix64 rng = stream_for(seed, static_cast<std::uint64_t>(truth.id));

  const auto jitter = [&]() { return (2.0 * rng.next_unit() - 1.0) * sigma_box_px; };
  const double b1 = truth.box.left + jitter();
  const double b2 = truth.box.right + jitter();
  const double b3 = truth.box.top + jitter();
  const double b4 = truth.box.bottom + jitter();

  const double angle = std::abs(sigma_att_rad * rng.next_normal());
  const double zc = 2.0 * rng.next_unit() - 1.0;
  const double phi = 2.0 * std::numbers::pi * rng.next_unit();
  const double s = std::sqrt(std::max(0.0, 1.0 - zc * zc));
  UnitQuaternion q_pert = truth.pose.q;
  if (angle > 0.0)
    q_pert = compose(truth.pose.q,
                     UnitQuaternion::from_axis_angle({s * std::cos(phi), s * std::sin(phi), zc}, angle));

  const AttitudeLabel label = make_label(book, q_pert, n, weighting);
  std::vector<double> v(static_cast<std::size_t>(book.m), kOracleLogitFloor);
  std::vector<double> w(static_cast<std::size_t>(book.m), kOracleLogitFloor);
  for (std::size_t j = 0; j < label.omega.size(); ++j) {
    v[static_cast<std::size_t>(label.omega[j])] = std::log(1.0 / label.n());
    w[static_cast<std::size_t>(label.omega[j])] = std::log(label.w_target[j]);
  }
  return OraclePrediction{BoundingBox(b1, b2, b3, b4), std::move(v), std::move(w)};
}

}  // namespace spnkit
