#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spnkit/spnkit.hpp"

namespace spnkit::cli {

enum ExitCode {
  kOk = 0,
  kUsageError = 1,
  kDataError = 2,
  kNonConvergence = 3,
};

namespace detail {

inline LengthConvention length_convention_from_name(const std::string& s) {
  if (s == "cuboid") return LengthConvention::kCuboidDiagonal;
  if (s == "max-pairwise") return LengthConvention::kMaxPairwiseDistance;
  throw InvalidInput("unknown length convention '" + s + "' (use cuboid or max-pairwise)");
}

inline InitializerForm initializer_form_from_name(const std::string& s) {
  if (s == "exact-ray") return InitializerForm::kExactRay;
  if (s == "composition") return InitializerForm::kRotationComposition;
  throw InvalidInput("unknown initializer form '" + s + "' (use exact-ray or composition)");
}

/// Kolmogorov-Smirnov sup-deviation between the sampled rotation angles and
/// the closed-form Haar angle CDF.
inline double haar_angle_ks(std::size_t count, std::uint64_t seed) {
  const auto quats = sample_uniform_rotations(count, seed);
  std::vector<double> angles;
  angles.reserve(count);
  for (const UnitQuaternion& q : quats) angles.push_back(q.angle());
  std::sort(angles.begin(), angles.end());
  double sup = 0.0;
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const double f = haar_angle_cdf(angles[i]);
    const double lo = static_cast<double>(i) / static_cast<double>(count);
    const double hi = static_cast<double>(i + 1) / static_cast<double>(count);
    sup = std::max({sup, std::abs(f - lo), std::abs(hi - f)});
  }
  return sup;
}

/// Central-difference validation of the loss gradients on random instances.
/// Returns the worst relative mismatch seen.
inline double loss_gradient_worst_error(int instances, std::uint64_t seed) {
  const int m = 64, n = 3, theta_dim = 8;
  const AttitudeCodebook book = build_codebook(m, seed ^ 0xb00cull);
  double worst = 0.0;
  for (int trial = 0; trial < instances; ++trial) {
    SplitMix64 rng = stream_for(seed, static_cast<std::uint64_t>(trial));
    const UnitQuaternion q_true = sample_rotation(rng);
    const AttitudeLabel label = make_label(book, q_true, n);
    AttitudeConfig cfg;
    cfg.m = m;
    cfg.n = n;
    cfg.lambda = 1e-3;
    cfg.mu = 0.7;
    std::vector<double> v(m), w(m), theta_cls(theta_dim), theta_reg(theta_dim);
    for (double& x : v) x = 2.0 * rng.next_normal();
    for (double& x : w) x = 2.0 * rng.next_normal();
    for (double& x : theta_cls) x = rng.next_normal();
    for (double& x : theta_reg) x = rng.next_normal();

    const AttitudeLossReport rep = attitude_losses(v, w, label, theta_cls, theta_reg, cfg);
    const double h = 1e-6;
    // Mixed tolerance: the magnitude floor turns the check absolute for
    // near-zero entries, where central differences bottom out at the
    // roundoff of the loss values (~1e-9 here).
    const auto relerr = [&worst](double analytic, double fd) {
      const double scale = std::max({std::abs(analytic), std::abs(fd), 1e-3});
      worst = std::max(worst, std::abs(analytic - fd) / scale);
    };
    const auto loss_at = [&](double* slot, double value, int which) {
      const double saved = *slot;
      *slot = value;
      const AttitudeLossReport r = attitude_losses(v, w, label, theta_cls, theta_reg, cfg);
      *slot = saved;
      return which == 0 ? r.class_loss : (which == 1 ? r.reg_loss : r.total_loss);
    };
    for (int j = 0; j < m; ++j) {
      relerr(rep.grad_v[static_cast<std::size_t>(j)],
             (loss_at(&v[static_cast<std::size_t>(j)], v[static_cast<std::size_t>(j)] + h, 0) -
              loss_at(&v[static_cast<std::size_t>(j)], v[static_cast<std::size_t>(j)] - h, 0)) /
                 (2 * h));
      relerr(cfg.mu * rep.grad_w_reg[static_cast<std::size_t>(j)],
             (loss_at(&w[static_cast<std::size_t>(j)], w[static_cast<std::size_t>(j)] + h, 2) -
              loss_at(&w[static_cast<std::size_t>(j)], w[static_cast<std::size_t>(j)] - h, 2)) /
                 (2 * h));
    }
    for (int j = 0; j < theta_dim; ++j) {
      relerr(rep.grad_theta_cls[static_cast<std::size_t>(j)],
             (loss_at(&theta_cls[static_cast<std::size_t>(j)], theta_cls[static_cast<std::size_t>(j)] + h, 0) -
              loss_at(&theta_cls[static_cast<std::size_t>(j)], theta_cls[static_cast<std::size_t>(j)] - h, 0)) /
                 (2 * h));
      relerr(rep.grad_theta_reg[static_cast<std::size_t>(j)],
             (loss_at(&theta_reg[static_cast<std::size_t>(j)], theta_reg[static_cast<std::size_t>(j)] + h, 1) -
              loss_at(&theta_reg[static_cast<std::size_t>(j)], theta_reg[static_cast<std::size_t>(j)] - h, 1)) /
                 (2 * h));
    }
  }
  return worst;
}

struct SolveRow {
  long long id = 0;
  Vec3 t{0, 0, 0};
  int iterations = 0;
  double residual_px = 0.0;
  bool converged = false;
};

inline std::string serialize_solve_rows(const std::vector<SolveRow>& rows) {
  std::ostringstream out;
  out << "id,tx,ty,tz,iterations,residual_px,converged\n";
  for (const SolveRow& r : rows)
    out << r.id << ',' << format_g17(r.t.x) << ',' << format_g17(r.t.y) << ','
        << format_g17(r.t.z) << ',' << r.iterations << ',' << format_g17(r.residual_px) << ','
        << (r.converged ? 1 : 0) << "\n";
  return out.str();
}

inline std::map<long long, UnitQuaternion> attitude_map_from_predictions(
    const std::filesystem::path& path) {
  std::map<long long, UnitQuaternion> out;
  for (const PredictionRow& row : load_predictions(path)) out.emplace(row.id, row.q);
  return out;
}

}  // namespace detail

struct CodebookGenArgs {
  int m = 1000;
  int n = 5;  // intended label width; only validated against m here
  std::uint64_t seed = 0;
  std::string out;
};

struct DatasetGenArgs {
  GenConfig cfg;
  std::string preset;  // "train" (12000 records) or "test" (3000)
  std::string weighting = "alpha-over-pi-squared";
  std::string out;
  int jobs = 0;
};

struct SolveArgs {
  std::string labels;
  std::string camera;  // empty: use the dataset manifest
  std::string model;   // empty: use the dataset manifest
  std::string attitude = "truth";
  std::string out;
  std::string length_convention = "cuboid";
  std::string initializer = "exact-ray";
  int jobs = 0;
  bool strict = false;
};

struct TrainToyArgs {
  std::string dataset;
  std::string codebook;
  ToyTrainConfig cfg;
  std::string out;
};

struct PredictArgs {
  std::string dataset;
  std::string codebook;
  std::string toy_model;  // toy predictor when set, oracle otherwise
  bool oracle = false;
  double sigma_att = 0.0;
  double sigma_box = 0.0;
  std::uint64_t seed = 0;
  int n = 0;  // 0: dataset manifest value
  std::string out;
  std::string length_convention = "cuboid";
  std::string initializer = "exact-ray";
  int jobs = 0;
};

struct EvalArgs {
  std::string truth;
  std::string pred;
  std::size_t bin = 100;
  std::string out;
};

inline int run_codebook_gen(const CodebookGenArgs& args) {
  if (args.n < 1 || args.n > args.m)
    throw InvalidInput("label width n must satisfy 1 <= n <= m");
  const AttitudeCodebook book = build_codebook(args.m, args.seed);
  save_codebook(book, args.out);
  std::cerr << "wrote " << args.out << " (" << book.m << " classes, seed " << book.seed << ")\n";
  return kOk;
}

inline int run_model_info(const std::string& spec) {
  const WireframeModel model = resolve_model(spec);
  const auto [lo, hi] = bounding_cuboid(model);
  std::cout << "model " << model.name << "\n"
            << "vertices " << model.vertices.size() << "\n"
            << "edges " << model.edges.size() << "\n"
            << "extent_x_m " << format_g17(hi.x - lo.x) << "\n"
            << "extent_y_m " << format_g17(hi.y - lo.y) << "\n"
            << "extent_z_m " << format_g17(hi.z - lo.z) << "\n"
            << "L_C_cuboid_m " << format_g17(characteristic_length(model)) << "\n"
            << "L_C_max_pairwise_m "
            << format_g17(characteristic_length(model, LengthConvention::kMaxPairwiseDistance))
            << "\n";
  return kOk;
}

inline int run_dataset_gen(DatasetGenArgs args) {
  if (args.cfg.count <= 0) {
    if (args.preset == "train")
      args.cfg.count = 12000;
    else if (args.preset == "test")
      args.cfg.count = 3000;
    else
      throw InvalidInput("give --count, or --preset train|test for the standard split sizes");
  }
  args.cfg.weighting = weighting_from_name(args.weighting);
  const AttitudeCodebook book = load_codebook(args.cfg.codebook);
  const Dataset ds = generate_dataset(args.cfg, book, resolve_jobs(args.jobs));
  save_dataset(ds, args.out);
  std::cerr << "wrote " << args.out << " (" << ds.records.size() << " records)\n";
  return kOk;
}

inline int run_solve(const SolveArgs& args) {
  const Dataset ds = load_dataset(args.labels);
  const PinholeCamera cam = args.camera.empty() ? ds.cam : resolve_camera(args.camera);
  const WireframeModel model = resolve_model(args.model.empty() ? ds.cfg.model : args.model);
  const double length =
      characteristic_length(model, detail::length_convention_from_name(args.length_convention));
  const InitializerForm form = detail::initializer_form_from_name(args.initializer);

  std::optional<std::map<long long, UnitQuaternion>> attitudes;
  if (args.attitude != "truth") attitudes = detail::attitude_map_from_predictions(args.attitude);

  std::vector<detail::SolveRow> rows(ds.records.size());
  parallel_for(ds.records.size(), resolve_jobs(args.jobs), [&](std::size_t i) {
    const SceneRecord& rec = ds.records[i];
    UnitQuaternion q = rec.pose.q;
    if (attitudes) {
      const auto it = attitudes->find(rec.id);
      if (it == attitudes->end())
        throw InvalidInput("attitude file has no entry for id " + std::to_string(rec.id));
      q = it->second;
    }
    const Vec3 t0 = coarse_position(cam, rec.box, length, form);
    const SolveReport rep = refine_position(cam, model, q, rec.box, t0);
    rows[i] = {rec.id, rep.t, rep.iterations, rep.final_residual_px, rep.converged};
  });

  write_file(args.out, detail::serialize_solve_rows(rows));
  const std::size_t unconverged =
      static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(),
                                             [](const detail::SolveRow& r) { return !r.converged; }));
  std::cerr << "wrote " << args.out << " (" << rows.size() << " rows, " << unconverged
            << " unconverged)\n";
  if (args.strict && unconverged > 0) {
    std::cerr << "error: " << unconverged << " records did not converge\n";
    return kNonConvergence;
  }
  return kOk;
}

inline int run_train_toy(const TrainToyArgs& args) {
  const Dataset ds = load_dataset(args.dataset);
  const AttitudeCodebook book = load_codebook(args.codebook);
  const ToyTrainResult result = train_toy(ds, book, args.cfg);
  save_toy_model(result.model, args.out);
  std::cerr << "initial_loss " << format_g17(result.initial_train_loss) << "\n";
  for (std::size_t e = 0; e < result.train_loss.size(); ++e) {
    std::cerr << "epoch " << e << " train_loss " << format_g17(result.train_loss[e]);
    if (e < result.val_loss.size()) std::cerr << " val_loss " << format_g17(result.val_loss[e]);
    std::cerr << "\n";
  }
  std::cerr << "wrote " << args.out << "\n";
  return kOk;
}

inline int run_predict(const PredictArgs& args) {
  const Dataset ds = load_dataset(args.dataset);
  const AttitudeCodebook book = load_codebook(args.codebook);
  if (to_hex(codebook_hash(book)) != ds.codebook_hash_hex)
    throw InvalidInput("codebook does not match the one the dataset was labeled with");
  const PinholeCamera& cam = ds.cam;
  const WireframeModel model = resolve_model(ds.cfg.model);
  const double length =
      characteristic_length(model, detail::length_convention_from_name(args.length_convention));
  const InitializerForm form = detail::initializer_form_from_name(args.initializer);
  const int n = args.n > 0 ? args.n : ds.cfg.n;

  std::optional<ToyModel> toy;
  if (!args.toy_model.empty()) toy = load_toy_model(args.toy_model);
  if (toy && toy->m != book.m) throw InvalidInput("toy model class count does not match codebook");

  std::vector<std::optional<PredictionRow>> rows(ds.records.size());
  parallel_for(ds.records.size(), resolve_jobs(args.jobs), [&](std::size_t i) {
    const SceneRecord& rec = ds.records[i];

    // Branch-1 stand-in: the truth box, optionally jittered.
    BoundingBox box = rec.box;
    std::vector<double> v, w;
    if (toy) {
      if (args.sigma_box > 0.0) {
        SplitMix64 rng = stream_for(args.seed, static_cast<std::uint64_t>(rec.id));
        const auto jitter = [&]() { return (2.0 * rng.next_unit() - 1.0) * args.sigma_box; };
        box = BoundingBox(box.left + jitter(), box.right + jitter(), box.top + jitter(),
                          box.bottom + jitter());
      }
      const FeatureVector f = silhouette_features(cam, rec.pose, model, box, toy->grid);
      ToyLogits logits = predict(*toy, f);
      v = std::move(logits.v);
      w = std::move(logits.w);
    } else {
      OraclePrediction op =
          oracle_predictor(rec, book, args.sigma_att, args.sigma_box, args.seed, n, ds.cfg.weighting);
      box = op.box;
      v = std::move(op.v);
      w = std::move(op.w);
    }

    const DecodedAttitude dec = decode_attitude(v, w, book, n);
    const Vec3 t0 = coarse_position(cam, box, length, form);
    const SolveReport rep = refine_position(cam, model, dec.q, box, t0);
    rows[i] = PredictionRow{rec.id, dec.q, rep.t, box};
  });

  std::vector<PredictionRow> out;
  out.reserve(rows.size());
  for (auto& r : rows) out.push_back(std::move(*r));
  write_file(args.out, serialize_predictions(out));
  std::cerr << "wrote " << args.out << " (" << out.size() << " rows)\n";
  return kOk;
}

inline int run_eval(const EvalArgs& args) {
  const Dataset truth = load_dataset(args.truth);
  const std::vector<PredictionRow> preds = load_predictions(args.pred);
  const std::vector<EvalRecord> records = evaluate(truth, preds);
  const BinnedReport report = binned_report(records, args.bin);

  std::filesystem::create_directories(args.out);
  const auto per_record = std::filesystem::path(args.out) / "per_record.csv";
  const auto binned = std::filesystem::path(args.out) / "binned.csv";
  write_file(per_record, serialize_eval_records(records));
  write_file(binned, serialize_binned_report(report));

  std::vector<double> ious, ez, er;
  for (const EvalRecord& r : records) {
    ious.push_back(r.iou);
    ez.push_back(r.e_t.z);
    er.push_back(degrees(r.e_r_rad));
  }
  const MetricStats si = metric_stats(std::move(ious));
  const MetricStats sz = metric_stats(std::move(ez));
  const MetricStats sr = metric_stats(std::move(er));
  std::cout << "records " << records.size() << "\n"
            << "iou mean " << si.mean << " median " << si.median << "\n"
            << "et_z_m mean " << sz.mean << " median " << sz.median << "\n"
            << "er_deg mean " << sr.mean << " median " << sr.median << "\n";
  std::cerr << "wrote " << per_record.string() << " and " << binned.string() << "\n";
  return kOk;
}

inline int run_selftest() {
  bool ok = true;

  const double ks = detail::haar_angle_ks(10000, 0x5eedf00dull);
  const bool haar_ok = ks < 0.02;
  std::cout << (haar_ok ? "PASS" : "FAIL") << " haar-angle-distribution sup-deviation "
            << format_g17(ks) << " (limit 0.02)\n";
  ok = ok && haar_ok;

  const double grad = detail::loss_gradient_worst_error(100, 0xc0ffeeull);
  const bool grad_ok = grad < 1e-5;
  std::cout << (grad_ok ? "PASS" : "FAIL") << " loss-gradient-check worst relative error "
            << format_g17(grad) << " (limit 1e-5)\n";
  ok = ok && grad_ok;

  return ok ? kOk : kDataError;
}

/// Parses and dispatches one invocation. Exit codes: 0 success, 1 usage
/// error, 2 data error, 3 unconverged records under --strict.
inline int run(const std::vector<std::string>& args) {
  CLI::App app{"pose toolkit: codebooks, synthetic scenes, box-constrained solving, evaluation"};
  app.require_subcommand(1);

  // codebook gen
  auto* codebook_cmd = app.add_subcommand("codebook", "attitude-class codebooks");
  codebook_cmd->require_subcommand(1);
  CodebookGenArgs cg;
  auto* codebook_gen = codebook_cmd->add_subcommand("gen", "sample a codebook");
  codebook_gen->add_option("--m", cg.m, "number of attitude classes")->capture_default_str();
  codebook_gen->add_option("--n", cg.n, "intended label width, checked against m")
      ->capture_default_str();
  codebook_gen->add_option("--seed", cg.seed, "sampling seed")->capture_default_str();
  codebook_gen->add_option("--out", cg.out, "output file")->required();

  // model info
  auto* model_cmd = app.add_subcommand("model", "wireframe model utilities");
  model_cmd->require_subcommand(1);
  std::string model_spec;
  auto* model_info = model_cmd->add_subcommand("info", "print extents and characteristic length");
  model_info->add_option("path", model_spec, "model file, or 'mock' for the built-in target")
      ->required();

  // dataset gen
  auto* dataset_cmd = app.add_subcommand("dataset", "synthetic scene datasets");
  dataset_cmd->require_subcommand(1);
  DatasetGenArgs dg;
  dg.cfg.count = 0;  // either --count or --preset decides
  auto* dataset_gen = dataset_cmd->add_subcommand("gen", "generate labeled scenes");
  dataset_gen->add_option("--count", dg.cfg.count, "number of records");
  dataset_gen->add_option("--preset", dg.preset,
                          "'train' (12000 records) or 'test' (3000) when --count is absent");
  dataset_gen->add_option("--seed", dg.cfg.seed, "sampling seed")->capture_default_str();
  dataset_gen->add_option("--camera", dg.cfg.camera, "'speed' or camera file")->capture_default_str();
  dataset_gen->add_option("--model", dg.cfg.model, "'mock' or model file")->capture_default_str();
  dataset_gen->add_option("--codebook", dg.cfg.codebook, "codebook file")->required();
  dataset_gen->add_option("--n", dg.cfg.n, "label width")->capture_default_str();
  dataset_gen
      ->add_option("--weighting", dg.weighting,
                   "alpha-over-pi-squared or alpha-over-pi-all-squared")
      ->capture_default_str();
  dataset_gen->add_option("--center-sigma-u", dg.cfg.center_sigma_u, "bearing-center spread, px");
  dataset_gen->add_option("--center-sigma-v", dg.cfg.center_sigma_v, "bearing-center spread, px");
  dataset_gen->add_option("--range-mean", dg.cfg.range_mean, "range mean, m")->capture_default_str();
  dataset_gen->add_option("--range-sigma", dg.cfg.range_sigma, "range spread, m")->capture_default_str();
  dataset_gen->add_option("--range-min", dg.cfg.range_min, "range lower bound, m")->capture_default_str();
  dataset_gen->add_option("--range-max", dg.cfg.range_max, "range upper bound, m")->capture_default_str();
  dataset_gen->add_option("--jobs", dg.jobs, "worker threads (default: logical cores)");
  dataset_gen->add_option("--out", dg.out, "output directory")->required();

  // solve
  SolveArgs sa;
  auto* solve_cmd = app.add_subcommand("solve", "estimate positions from boxes and attitudes");
  solve_cmd->add_option("--labels", sa.labels, "dataset directory")->required();
  solve_cmd->add_option("--camera", sa.camera, "'speed' or camera file (default: dataset manifest)");
  solve_cmd->add_option("--model", sa.model, "'mock' or model file (default: dataset manifest)");
  solve_cmd->add_option("--attitude", sa.attitude, "'truth' or a predictions CSV")
      ->capture_default_str();
  solve_cmd->add_option("--length-convention", sa.length_convention, "cuboid or max-pairwise")
      ->capture_default_str();
  solve_cmd->add_option("--initializer", sa.initializer, "exact-ray or composition")
      ->capture_default_str();
  solve_cmd->add_option("--jobs", sa.jobs, "worker threads (default: logical cores)");
  solve_cmd->add_flag("--strict", sa.strict, "exit 3 if any record fails to converge");
  solve_cmd->add_option("--out", sa.out, "output CSV")->required();

  // train toy
  auto* train_cmd = app.add_subcommand("train", "fit predictors");
  train_cmd->require_subcommand(1);
  TrainToyArgs ta;
  auto* train_toy_cmd = train_cmd->add_subcommand("toy", "train the linear silhouette model");
  train_toy_cmd->add_option("--dataset", ta.dataset, "dataset directory")->required();
  train_toy_cmd->add_option("--codebook", ta.codebook, "codebook file")->required();
  train_toy_cmd->add_option("--grid", ta.cfg.grid, "feature grid size")->capture_default_str();
  train_toy_cmd->add_option("--epochs", ta.cfg.epochs, "training epochs")->capture_default_str();
  train_toy_cmd->add_option("--seed", ta.cfg.seed, "shuffle seed")->capture_default_str();
  train_toy_cmd->add_option("--batch", ta.cfg.batch_size, "batch size")->capture_default_str();
  train_toy_cmd->add_option("--lambda", ta.cfg.lambda, "L2 strength")->capture_default_str();
  train_toy_cmd->add_option("--mu", ta.cfg.mu, "regression loss weight")->capture_default_str();
  train_toy_cmd->add_option("--out", ta.out, "output model file")->required();

  // predict
  PredictArgs pa;
  auto* predict_cmd = app.add_subcommand("predict", "produce a predictions CSV for a dataset");
  predict_cmd->add_option("--dataset", pa.dataset, "dataset directory")->required();
  predict_cmd->add_option("--codebook", pa.codebook, "codebook file")->required();
  auto* toy_opt = predict_cmd->add_option("--toy", pa.toy_model, "trained toy model file");
  auto* oracle_flag = predict_cmd->add_flag("--oracle", pa.oracle, "noise-controlled oracle predictor");
  toy_opt->excludes(oracle_flag);
  predict_cmd->add_option("--sigma-att", pa.sigma_att, "oracle attitude noise, rad")
      ->capture_default_str();
  predict_cmd->add_option("--sigma-box", pa.sigma_box, "box edge noise, px")->capture_default_str();
  predict_cmd->add_option("--seed", pa.seed, "noise seed")->capture_default_str();
  predict_cmd->add_option("--n", pa.n, "decode width (default: dataset manifest)");
  predict_cmd->add_option("--length-convention", pa.length_convention, "cuboid or max-pairwise")
      ->capture_default_str();
  predict_cmd->add_option("--initializer", pa.initializer, "exact-ray or composition")
      ->capture_default_str();
  predict_cmd->add_option("--jobs", pa.jobs, "worker threads (default: logical cores)");
  predict_cmd->add_option("--out", pa.out, "output CSV")->required();

  // eval
  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "score predictions against a truth dataset");
  eval_cmd->add_option("--truth", ea.truth, "truth dataset directory")->required();
  eval_cmd->add_option("--pred", ea.pred, "predictions CSV")->required();
  eval_cmd->add_option("--bin", ea.bin, "records per range bin")->capture_default_str();
  eval_cmd->add_option("--out", ea.out, "output directory")->required();

  // selftest
  auto* selftest_cmd = app.add_subcommand("selftest", "run the gradient and distribution checks");

  std::vector<char*> argv;
  std::string program = "spnkit";
  argv.push_back(program.data());
  std::vector<std::string> owned = args;
  for (std::string& a : owned) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // help text to stdout, exit 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kUsageError;
  }

  try {
    if (codebook_gen->parsed()) return run_codebook_gen(cg);
    if (model_info->parsed()) return run_model_info(model_spec);
    if (dataset_gen->parsed()) return run_dataset_gen(dg);
    if (solve_cmd->parsed()) return run_solve(sa);
    if (train_toy_cmd->parsed()) return run_train_toy(ta);
    if (predict_cmd->parsed()) return run_predict(pa);
    if (eval_cmd->parsed()) return run_eval(ea);
    if (selftest_cmd->parsed()) return run_selftest();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsageError;
}

}  // namespace spnkit::cli
