#include "velu/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "velu/errors.hpp"
#include "velu/kernels.hpp"
#include "velu/rng.hpp"
#include "velu/svg.hpp"
#include "velu/transport.hpp"

namespace velu {

namespace {

ImageDataset limit_dataset(ImageDataset ds, std::size_t limit) {
  if (limit == 0 || limit >= ds.size()) return ds;
  ImageDataset out;
  out.name = ds.name;
  out.class_count = ds.class_count;
  out.images = Matrix(limit, ds.dim());
  std::copy(ds.images.data(), ds.images.data() + limit * ds.dim(), out.images.data());
  out.labels.assign(ds.labels.begin(), ds.labels.begin() + static_cast<std::ptrdiff_t>(limit));
  return out;
}

// top-1 / top-k accuracy in percent over the dataset, forward in fixed-size
// chunks so VeLU evaluation statistics are deterministic.
std::pair<double, double> evaluate(const Mlp& mlp, const ImageDataset& ds, int topk) {
  const std::size_t chunk = 512;
  std::size_t hit1 = 0, hitk = 0;
  for (std::size_t start = 0; start < ds.size(); start += chunk) {
    const std::size_t take = std::min(chunk, ds.size() - start);
    Matrix x(take, ds.dim());
    std::copy(ds.images.data() + start * ds.dim(), ds.images.data() + (start + take) * ds.dim(),
              x.data());
    const Matrix logits = predict(mlp, x);
    for (std::size_t i = 0; i < take; ++i) {
      const auto row = logits.row(i);
      const int label = ds.labels[start + i];
      const double label_score = row[label];
      std::size_t argmax = 0;
      std::size_t strictly_above = 0;
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (row[j] > row[argmax]) argmax = j;
        if (row[j] > label_score) ++strictly_above;
      }
      if (static_cast<int>(argmax) == label) ++hit1;
      if (strictly_above < static_cast<std::size_t>(topk)) ++hitk;
    }
  }
  const double n = static_cast<double>(ds.size());
  return {100.0 * static_cast<double>(hit1) / n, 100.0 * static_cast<double>(hitk) / n};
}

std::vector<std::size_t> velu_layer_indices(const Mlp& mlp) {
  std::vector<std::size_t> idx;
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    if (mlp.layers[l].activation && mlp.layers[l].activation->is_velu()) idx.push_back(l);
  }
  return idx;
}

}  // namespace

ImageDataset load_dataset(const DatasetSpec& spec) {
  if (spec.kind == "blobs") {
    ImageDataset ds =
        make_blobs(spec.blobs_seed, spec.n_per_class, spec.classes, spec.dim, spec.spread);
    return limit_dataset(std::move(ds), spec.limit);
  }
  if (spec.kind == "mnist") {
    std::string images = spec.images_path;
    std::string labels = spec.labels_path;
    if (images.empty() || labels.empty()) {
      const std::string dir = resolve_data_dir(spec.data_dir);
      if (dir.empty()) {
        throw Error(
            "mnist dataset needs --images/--labels paths, --data-dir, or VELU_KIT_DATA_DIR");
      }
      images = dir + "/train-images-idx3-ubyte";
      labels = dir + "/train-labels-idx1-ubyte";
    }
    ImageDataset ds = load_idx(images, labels);
    ds.name = "mnist";
    return limit_dataset(std::move(ds), spec.limit);
  }
  throw InvalidParamsError("unknown dataset kind '" + spec.kind + "' (expected blobs or mnist)");
}

Mlp build_model(const TrainConfig& config, std::size_t input_dim, int classes) {
  std::vector<std::size_t> widths;
  widths.push_back(input_dim);
  widths.insert(widths.end(), config.hidden_widths.begin(), config.hidden_widths.end());
  widths.push_back(static_cast<std::size_t>(classes));

  const std::size_t hidden = config.hidden_widths.size();
  std::vector<ActivationKind> acts;
  acts.reserve(hidden);
  for (std::size_t h = 0; h < hidden; ++h) {
    if (config.scenario == Scenario::Full) {
      acts.push_back(config.activation);
    } else {
      // Head-only replacement: the configured activation goes on the last two
      // hidden layers, but the first hidden layer always stays ReLU as the
      // backbone stand-in.
      const bool in_head = h + 2 >= hidden && h > 0;
      acts.push_back(in_head ? config.activation : ActivationKind::relu());
    }
  }
  return make_mlp(widths, acts, config.seed);
}

TrainReport run_training(const TrainConfig& config) {
  if (config.epochs == 0) throw InvalidParamsError("epochs must be >= 1");
  for (std::size_t w : config.hidden_widths) {
    if (w == 0) throw InvalidParamsError("hidden widths must be >= 1");
  }

  const auto t_start = std::chrono::steady_clock::now();

  const ImageDataset full = load_dataset(config.dataset);
  auto [train, test] = split_train_test(full, config.dataset.train_fraction, config.seed);

  Mlp mlp = build_model(config, full.dim(), full.class_count);
  const auto velu_layers = velu_layer_indices(mlp);

  TrainReport report;
  report.config = config;
  report.config.run_label =
      config.run_label.empty() ? run_label_for(config.activation, config.seed) : config.run_label;

  std::string out_dir = config.out_dir;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    if (config.save_checkpoints) {
      report.checkpoint_before = out_dir + "/" + report.config.run_label + "_before.json";
      save_checkpoint(mlp, report.checkpoint_before);
    }
  }

  OptimizerState opt(config.optimizer, mlp);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    Batcher batcher(train, config.batch_size, derive_seed(config.seed, epoch));
    double loss_sum = 0.0;
    std::size_t sample_count = 0;
    std::size_t clamp_hits = 0;
    std::vector<double> w2_sums(velu_layers.size(), 0.0);
    std::size_t batch_count = 0;

    while (!batcher.done()) {
      Batch batch = batcher.next();
      double loss = 0.0;
      try {
        auto [logits, cache] = forward(mlp, batch.x);
        loss = compute_loss(mlp, cache, batch.labels);
        if (!std::isfinite(loss)) {
          throw DivergenceDetectedError(
              "training loss became non-finite; reducing lambda_ot typically stabilizes training");
        }
        Gradients grads = backward(mlp, cache, batch.labels, config.grad_mode);
        if (config.clipnorm) clip_global_norm(grads, *config.clipnorm);
        opt.step(mlp, grads);

        for (std::size_t k = 0; k < velu_layers.size(); ++k) {
          const VeluForwardAux& aux = *cache.aux[velu_layers[k]];
          w2_sums[k] += aux.w2_squared;
          clamp_hits += aux.clamp_hit_count;
        }
      } catch (const NonFiniteActivationError& e) {
        throw DivergenceDetectedError(std::string(e.what()) +
                                      "; reducing lambda_ot typically stabilizes training");
      }
      loss_sum += loss * static_cast<double>(batch.labels.size());
      sample_count += batch.labels.size();
      ++batch_count;
    }

    EpochMetrics metrics;
    metrics.epoch = epoch;
    metrics.train_loss = loss_sum / static_cast<double>(sample_count);
    std::tie(metrics.test_top1, metrics.test_topk) = evaluate(mlp, test, config.topk);
    metrics.clamp_hits = clamp_hits;
    metrics.w2_mean_per_layer.resize(w2_sums.size());
    for (std::size_t k = 0; k < w2_sums.size(); ++k) {
      metrics.w2_mean_per_layer[k] = w2_sums[k] / static_cast<double>(batch_count);
    }
    report.epochs.push_back(std::move(metrics));
  }

  report.param_digest = parameter_digest(mlp);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

  if (!out_dir.empty()) {
    if (config.save_checkpoints) {
      report.checkpoint_after = out_dir + "/" + report.config.run_label + "_after.json";
      save_checkpoint(mlp, report.checkpoint_after);
    }
    save_train_report(report, out_dir + "/" + report.config.run_label + ".json");
  }
  return report;
}

ComparisonReport run_comparison(const TrainConfig& base, const std::vector<ActivationKind>& kinds,
                                const std::vector<std::uint64_t>& seeds) {
  if (kinds.empty() || seeds.empty()) {
    throw InvalidParamsError("comparison needs at least one kind and one seed");
  }

  ComparisonReport report;
  for (const ActivationKind& kind : kinds) {
    for (std::uint64_t seed : seeds) {
      TrainConfig config = base;
      config.activation = kind;
      config.seed = seed;
      config.run_label = run_label_for(kind, seed);
      report.runs.push_back(run_training(config));
    }
  }

  for (const ActivationKind& kind : kinds) {
    KindAggregate agg;
    agg.kind = activation_name(kind);
    for (std::size_t e = 0; e < base.epochs; ++e) {
      EpochAggregate ea;
      ea.epoch = e + 1;
      ea.min_loss = ea.min_top1 = ea.min_topk = std::numeric_limits<double>::infinity();
      ea.max_loss = ea.max_top1 = ea.max_topk = -std::numeric_limits<double>::infinity();
      std::size_t n = 0;
      for (const TrainReport& run : report.runs) {
        if (activation_name(run.config.activation) != agg.kind) continue;
        const EpochMetrics& m = run.epochs[e];
        ea.mean_loss += m.train_loss;
        ea.mean_top1 += m.test_top1;
        ea.mean_topk += m.test_topk;
        ea.min_loss = std::min(ea.min_loss, m.train_loss);
        ea.max_loss = std::max(ea.max_loss, m.train_loss);
        ea.min_top1 = std::min(ea.min_top1, m.test_top1);
        ea.max_top1 = std::max(ea.max_top1, m.test_top1);
        ea.min_topk = std::min(ea.min_topk, m.test_topk);
        ea.max_topk = std::max(ea.max_topk, m.test_topk);
        ++n;
      }
      ea.mean_loss /= static_cast<double>(n);
      ea.mean_top1 /= static_cast<double>(n);
      ea.mean_topk /= static_cast<double>(n);
      agg.epochs.push_back(ea);
    }
    report.aggregates.push_back(std::move(agg));
  }

  if (!base.out_dir.empty()) {
    std::filesystem::create_directories(base.out_dir);
    write_comparison_csv(report, base.out_dir + "/comparison.csv");
    std::ofstream agg_out(base.out_dir + "/aggregate.json", std::ios::binary);
    if (!agg_out) throw Error("cannot write " + base.out_dir + "/aggregate.json");
    agg_out << comparison_report_to_json(report) << "\n";

    SvgPanel acc_panel{"test top-1 (mean over seeds)", "epoch", "top-1 %", {}};
    SvgPanel loss_panel{"train loss (mean over seeds)", "epoch", "loss", {}};
    for (std::size_t k = 0; k < report.aggregates.size(); ++k) {
      const KindAggregate& agg = report.aggregates[k];
      SvgSeries acc{agg.kind, svg_palette()[k % svg_palette().size()], {}};
      SvgSeries loss{agg.kind, svg_palette()[k % svg_palette().size()], {}};
      for (const EpochAggregate& ea : agg.epochs) {
        acc.points.emplace_back(static_cast<double>(ea.epoch), ea.mean_top1);
        loss.points.emplace_back(static_cast<double>(ea.epoch), ea.mean_loss);
      }
      acc_panel.series.push_back(std::move(acc));
      loss_panel.series.push_back(std::move(loss));
    }
    write_svg_chart({acc_panel, loss_panel}, base.out_dir + "/curves.svg");
  }
  return report;
}

std::vector<HistogramRecord> collect_preactivation_histograms(const TrainConfig& config,
                                                              const std::string& before_checkpoint,
                                                              const std::string& after_checkpoint) {
  const Mlp before = load_checkpoint(before_checkpoint);
  const Mlp after = load_checkpoint(after_checkpoint);
  if (before.layers.size() != after.layers.size()) {
    throw ShapeMismatchError("before/after checkpoints have different layer counts");
  }
  const std::size_t hidden_count = before.layers.size() - 1;
  if (config.hist_layer >= hidden_count) {
    throw LayerIndexOutOfRangeError("hidden layer index " + std::to_string(config.hist_layer) +
                                    " out of range; model has " + std::to_string(hidden_count) +
                                    " hidden layers");
  }

  const ImageDataset full = load_dataset(config.dataset);
  auto [train, test] = split_train_test(full, config.dataset.train_fraction, config.seed);
  (void)train;

  auto gather_preacts = [&](const Mlp& mlp) {
    std::vector<double> values;
    values.reserve(test.size() * mlp.layers[config.hist_layer].fan_out());
    const std::size_t chunk = 512;
    for (std::size_t start = 0; start < test.size(); start += chunk) {
      const std::size_t take = std::min(chunk, test.size() - start);
      Matrix x(take, test.dim());
      std::copy(test.images.data() + start * test.dim(),
                test.images.data() + (start + take) * test.dim(), x.data());
      auto [logits, cache] = forward(mlp, x);
      const auto z = cache.preacts[config.hist_layer].flat();
      values.insert(values.end(), z.begin(), z.end());
    }
    return values;
  };

  const std::vector<double> vals_before = gather_preacts(before);
  const std::vector<double> vals_after = gather_preacts(after);

  double radius = 0.0;
  for (double v : vals_before) radius = std::max(radius, std::abs(v));
  for (double v : vals_after) radius = std::max(radius, std::abs(v));
  if (radius == 0.0) radius = 1.0;

  constexpr std::size_t kBins = 64;
  auto make_record = [&](const std::vector<double>& values, const std::string& tag) {
    HistogramRecord rec;
    rec.epoch_tag = tag;
    rec.layer_index = config.hist_layer;
    rec.bin_edges.resize(kBins + 1);
    for (std::size_t b = 0; b <= kBins; ++b) {
      rec.bin_edges[b] = -radius + 2.0 * radius * static_cast<double>(b) / kBins;
    }
    rec.counts.assign(kBins, 0);
    double sum = 0.0, sumsq = 0.0;
    for (double v : values) {
      auto bin = static_cast<std::ptrdiff_t>((v + radius) / (2.0 * radius) * kBins);
      bin = std::clamp<std::ptrdiff_t>(bin, 0, kBins - 1);
      ++rec.counts[static_cast<std::size_t>(bin)];
      sum += v;
    }
    const double mean = sum / static_cast<double>(values.size());
    for (double v : values) sumsq += (v - mean) * (v - mean);
    rec.value_std = std::sqrt(sumsq / static_cast<double>(values.size()));
    return rec;
  };

  return {make_record(vals_before, "before"), make_record(vals_after, "after")};
}

// --- gradient checking ------------------------------------------------------

namespace {

// Parameter sampler over the recommended stable ranges; values outside any
// documented range stay at their defaults.
VeluParams sample_params(Rng& rng, bool alternate_centered) {
  VeluParams p;
  p.alpha = rng.uniform(0.05, 0.2);
  p.beta1 = rng.uniform(0.05, 0.3);
  p.beta2 = rng.uniform(0.05, 0.3);
  p.gamma = rng.uniform(0.0, 0.2);
  p.momentum = rng.uniform(0.05, 0.3);
  p.lambda_ot = rng.uniform(0.001, 0.05);
  p.lambda_scale = rng.uniform(0.5, 1.5);
  if (alternate_centered) p.std_mode = StdMode::Centered;
  return p;
}

double rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
}

void record_check(GradCheckSubSuite& suite, GradCheckEntry& worst, const std::string& label,
                  double analytic, double numeric) {
  ++suite.checks;
  const double rel = rel_error(analytic, numeric);
  if (rel >= worst.rel_err) {
    worst = {label, analytic, numeric, std::abs(analytic - numeric), rel};
  }
  suite.max_rel_err = std::max(suite.max_rel_err, rel);
}

// Central difference of a scalar function.
template <typename F>
double central_diff(F&& f, double x, double step) {
  return (f(x + step) - f(x - step)) / (2.0 * step);
}

// True when a symmetric step around x crosses the arcsin clamp boundary, where
// one-sidedness makes the comparison meaningless.
bool straddles_clamp(double x, double step, const VeluParams& p) {
  const double boundary = (1.0 - kArcsinClampDelta) / p.beta2;
  return (std::abs(x) - boundary) * (std::abs(x) + 2.0 * step - boundary) < 0.0 ||
         std::abs(std::abs(x) - boundary) <= 2.0 * step;
}

void finalize(GradCheckSubSuite& suite, double tolerance) {
  suite.tolerance = tolerance;
  suite.pass = suite.max_rel_err <= tolerance;
}

}  // namespace

GradCheckReport run_gradcheck_suite(const GradCheckSpec& spec) {
  if (spec.grid_n == 0 || !(spec.grid_lo < spec.grid_hi)) {
    throw InvalidRangeError("gradcheck grid requires lo < hi and a non-empty grid");
  }

  GradCheckReport report;
  Rng rng(spec.seed);

  std::vector<double> grid(spec.grid_n);
  for (std::size_t i = 0; i < spec.grid_n; ++i) {
    grid[i] = spec.grid_lo + (spec.grid_hi - spec.grid_lo) * static_cast<double>(i) /
                                 static_cast<double>(spec.grid_n - 1);
  }

  // 1) frozen-statistics scalar derivative vs central differences.
  {
    GradCheckSubSuite suite;
    suite.name = "frozen_scalar";
    for (std::size_t set = 0; set < spec.param_sets; ++set) {
      const VeluParams p = sample_params(rng, set % 2 == 1);
      const BatchStats stats = compute_stats(grid, p.epsilon, p.std_mode);
      const double a = adaptive_factor(stats, p);
      GradCheckEntry worst;
      for (double x : grid) {
        const double step = 1e-6 * std::max(1.0, std::abs(x));
        if (straddles_clamp(x, step, p)) continue;
        const double analytic = velu_derivative_frozen(x, p, stats);
        const double numeric = central_diff(
            [&](double t) { return p.lambda_scale * t * sigmoid(arctan_arcsin(t, p)) * a; }, x,
            step);
        record_check(suite, worst, "set " + std::to_string(set) + " x=" + std::to_string(x),
                     analytic, numeric);
      }
      suite.worst.push_back(worst);
    }
    finalize(suite, spec.tol_frozen);
    report.suites.push_back(std::move(suite));
  }

  // 2) through-stats Jacobian vs full finite differences.
  {
    GradCheckSubSuite suite;
    suite.name = "jacobian";
    const std::size_t batch_sizes[] = {4, 8, 16, 32};
    for (std::size_t cfg = 0; cfg < 4; ++cfg) {
      const VeluParams p = cfg == 0 ? VeluParams{} : sample_params(rng, cfg % 2 == 1);
      for (std::size_t n : batch_sizes) {
        std::vector<double> x(n);
        // Batches stay inside |x| <= 3 so no finite-difference step can cross
        // the clamp boundary for any sampled beta2.
        for (double& v : x) v = std::clamp(rng.normal(0.0, 1.5), -3.0, 3.0);
        const Matrix jac = velu_jacobian_batch(x, p);
        GradCheckEntry worst;
        for (std::size_t j = 0; j < n; ++j) {
          const double step = 1e-5 * std::max(1.0, std::abs(x[j]));
          std::vector<double> lo = x, hi = x;
          lo[j] -= step;
          hi[j] += step;
          const auto y_lo = velu_forward_batch(lo, p).first;
          const auto y_hi = velu_forward_batch(hi, p).first;
          for (std::size_t i = 0; i < n; ++i) {
            const double numeric = (y_hi[i] - y_lo[i]) / (2.0 * step);
            record_check(suite, worst,
                         "cfg " + std::to_string(cfg) + " n=" + std::to_string(n) + " J(" +
                             std::to_string(i) + "," + std::to_string(j) + ")",
                         jac(i, j), numeric);
          }
        }
        suite.worst.push_back(worst);
      }
    }
    finalize(suite, spec.tol_jacobian);
    report.suites.push_back(std::move(suite));
  }

  // 3) W2 batch gradient vs finite differences of the distance.
  {
    GradCheckSubSuite suite;
    suite.name = "w2_grad";
    for (std::size_t set = 0; set < 20; ++set) {
      const VeluParams p = set == 0 ? VeluParams{} : sample_params(rng, set % 2 == 1);
      std::vector<double> x(8);
      for (double& v : x) v = rng.normal(0.5, 1.2);
      const auto grad = w2_grad_batch(x, p);
      GradCheckEntry worst;
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double step = 1e-6 * std::max(1.0, std::abs(x[j]));
        auto distance = [&](double t) {
          std::vector<double> probe = x;
          probe[j] = t;
          const BatchStats stats = compute_stats(probe, p.epsilon, p.std_mode);
          return std::sqrt(w2_squared(stats, GaussianTarget{p.mu_target, p.sigma_target}));
        };
        const double numeric = central_diff(distance, x[j], step);
        record_check(suite, worst, "set " + std::to_string(set) + " j=" + std::to_string(j),
                     grad[j], numeric);
      }
      suite.worst.push_back(worst);
    }
    finalize(suite, spec.tol_w2);
    report.suites.push_back(std::move(suite));
  }

  // 4) end-to-end loss gradients of a two-hidden-layer VeLU net, exact mode,
  //    one run per W2 mode. Lambda gradients go to their own sub-suite with
  //    the tighter tolerance.
  {
    GradCheckSubSuite suite;
    suite.name = "end_to_end";
    GradCheckSubSuite lambda_suite;
    lambda_suite.name = "lambda";

    const W2Mode modes[] = {W2Mode::OutputSubtraction, W2Mode::LossPenalty, W2Mode::Off};
    for (std::size_t mi = 0; mi < 3; ++mi) {
      VeluParams p;
      p.w2_mode = modes[mi];
      TrainConfig cfg;
      cfg.activation = ActivationKind::velu(p);
      cfg.hidden_widths = {4, 3};
      cfg.scenario = Scenario::Full;
      cfg.seed = spec.seed + mi;
      Mlp mlp = build_model(cfg, 5, 3);

      Matrix batch(8, 5);
      for (double& v : batch.flat()) v = rng.normal(0.0, 1.0);
      std::vector<int> labels(8);
      for (int& l : labels) l = static_cast<int>(rng.uniform_index(3));

      auto loss_at = [&]() {
        auto [logits, cache] = forward(mlp, batch);
        return compute_loss(mlp, cache, labels);
      };

      auto [logits, cache] = forward(mlp, batch);
      const Gradients grads = backward(mlp, cache, labels, GradMode::Exact);

      GradCheckEntry worst;
      GradCheckEntry worst_lambda;
      auto check_param = [&](double& param, double analytic, const std::string& label,
                             bool is_lambda) {
        const double step = 1e-5 * std::max(1.0, std::abs(param));
        const double saved = param;
        param = saved + step;
        const double up = loss_at();
        param = saved - step;
        const double down = loss_at();
        param = saved;
        const double numeric = (up - down) / (2.0 * step);
        if (is_lambda) {
          record_check(lambda_suite, worst_lambda, label, analytic, numeric);
        } else {
          record_check(suite, worst, label, analytic, numeric);
        }
      };

      const std::string tag = "mode " + std::to_string(mi) + " ";
      for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
        DenseLayer& layer = mlp.layers[l];
        for (std::size_t r = 0; r < layer.fan_out(); ++r) {
          for (std::size_t c = 0; c < layer.fan_in(); ++c) {
            check_param(layer.weights(r, c), grads.layers[l].weights(r, c),
                        tag + "W" + std::to_string(l) + "(" + std::to_string(r) + "," +
                            std::to_string(c) + ")",
                        false);
          }
          check_param(layer.biases[r], grads.layers[l].biases[r],
                      tag + "b" + std::to_string(l) + "[" + std::to_string(r) + "]", false);
        }
        if (layer.activation && layer.activation->is_velu()) {
          check_param(layer.activation->velu_params().lambda_scale, grads.layers[l].lambda,
                      tag + "lambda" + std::to_string(l), true);
        }
      }
      suite.worst.push_back(worst);
      lambda_suite.worst.push_back(worst_lambda);
    }
    finalize(suite, spec.tol_end_to_end);
    finalize(lambda_suite, 1e-5);
    report.suites.push_back(std::move(suite));
    report.suites.push_back(std::move(lambda_suite));
  }

  // 5) ReLU control: the frozen check applied to a kinked baseline, with the
  //    band around the kink excluded.
  if (spec.include_relu_control) {
    GradCheckSubSuite suite;
    suite.name = "relu_control";
    const ActivationKind relu = ActivationKind::relu();
    GradCheckEntry worst;
    for (double x : grid) {
      const double step = 1e-6 * std::max(1.0, std::abs(x));
      if (std::abs(x) <= std::max(1e-6, 2.0 * step)) continue;
      const double analytic = baseline_derivative(relu, x);
      const double numeric =
          central_diff([&](double t) { return baseline_forward(relu, t); }, x, step);
      record_check(suite, worst, "x=" + std::to_string(x), analytic, numeric);
    }
    suite.worst.push_back(worst);
    finalize(suite, spec.tol_frozen);
    report.suites.push_back(std::move(suite));
  }

  for (const GradCheckSubSuite& s : report.suites) {
    report.max_rel_err = std::max(report.max_rel_err, s.max_rel_err);
  }
  report.pass = std::all_of(report.suites.begin(), report.suites.end(),
                            [](const GradCheckSubSuite& s) { return s.pass; });
  return report;
}

const GradCheckEntry* GradCheckReport::worst_entry() const {
  const GradCheckEntry* top = nullptr;
  for (const GradCheckSubSuite& s : suites) {
    for (const GradCheckEntry& e : s.worst) {
      if (!top || e.rel_err > top->rel_err) top = &e;
    }
  }
  return top;
}

}  // namespace velu
