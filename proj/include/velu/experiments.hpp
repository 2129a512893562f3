#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "velu/datasets.hpp"
#include "velu/nn.hpp"
#include "velu/params.hpp"

namespace velu {

// Which dataset a run trains on and how it is split.
struct DatasetSpec {
  std::string kind = "blobs";  // "blobs" | "mnist"
  std::string images_path;     // explicit IDX paths for kind == "mnist"
  std::string labels_path;
  std::string data_dir;        // directory fallback; VELU_KIT_DATA_DIR applies last
  std::size_t limit = 0;       // keep only the first `limit` samples (0 = all)
  double train_fraction = 0.8;

  std::uint64_t blobs_seed = 42;
  std::size_t n_per_class = 250;
  int classes = 4;
  std::size_t dim = 16;
  double spread = 1.0;
};

// Full: every hidden layer uses the configured activation.
// HeadOnly: only the last two hidden layers do; earlier hidden layers (always
// including the first) stay ReLU, standing in for a fixed backbone.
enum class Scenario { HeadOnly, Full };

struct TrainConfig {
  DatasetSpec dataset;
  std::vector<std::size_t> hidden_widths = {256, 64};
  ActivationKind activation = ActivationKind::velu();
  Scenario scenario = Scenario::Full;
  OptimizerConfig optimizer = AdamConfig{};
  std::size_t epochs = 5;
  std::size_t batch_size = 128;
  std::uint64_t seed = 1;
  std::optional<double> clipnorm = 1.0;
  GradMode grad_mode = GradMode::Fast;
  int topk = 5;
  std::size_t hist_layer = 1;     // hidden layer whose preactivations cmd_hist records
  bool save_checkpoints = false;  // write before/after checkpoints next to the report
  std::string out_dir;            // empty: nothing persisted
  std::string run_label;          // file-name stem; defaults to <kind>_<seed>
};

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double test_top1 = 0.0;  // percent
  double test_topk = 0.0;  // percent
  std::vector<double> w2_mean_per_layer;  // mean W2^2 per VeLU layer, layer order
  std::size_t clamp_hits = 0;             // arcsin clamp events summed over batches/layers
};

struct TrainReport {
  TrainConfig config;
  std::vector<EpochMetrics> epochs;
  double wall_seconds = 0.0;
  std::string param_digest;
  std::string checkpoint_before;  // populated when config.save_checkpoints
  std::string checkpoint_after;
};

struct GradCheckEntry {
  std::string label;
  double analytic = 0.0;
  double numeric = 0.0;
  double abs_err = 0.0;
  double rel_err = 0.0;
};

struct GradCheckSubSuite {
  std::string name;
  double tolerance = 0.0;
  std::size_t checks = 0;
  double max_rel_err = 0.0;
  bool pass = false;
  std::vector<GradCheckEntry> worst;  // worst entry per sampled configuration
};

struct GradCheckReport {
  std::vector<GradCheckSubSuite> suites;
  double max_rel_err = 0.0;
  bool pass = false;

  const GradCheckEntry* worst_entry() const;
};

struct GradCheckSpec {
  double grid_lo = -5.0;
  double grid_hi = 5.0;
  std::size_t grid_n = 200;
  std::size_t param_sets = 20;
  std::uint64_t seed = 2024;
  double tol_frozen = 1e-6;
  double tol_jacobian = 1e-5;
  double tol_w2 = 1e-6;
  double tol_end_to_end = 1e-4;
  bool include_relu_control = true;
};

struct HistogramRecord {
  std::vector<double> bin_edges;     // 65 edges, symmetric data-derived range
  std::vector<std::size_t> counts;   // 64 bins; sums to the sample count
  std::string epoch_tag;             // "before" | "after"
  std::size_t layer_index = 0;
  double value_std = 0.0;            // std of the recorded preactivations
};

struct EpochAggregate {
  std::size_t epoch = 0;
  double mean_loss = 0.0, min_loss = 0.0, max_loss = 0.0;
  double mean_top1 = 0.0, min_top1 = 0.0, max_top1 = 0.0;
  double mean_topk = 0.0, min_topk = 0.0, max_topk = 0.0;
};

struct KindAggregate {
  std::string kind;
  std::vector<EpochAggregate> epochs;
};

struct ComparisonReport {
  std::vector<TrainReport> runs;           // one per (kind, seed)
  std::vector<KindAggregate> aggregates;   // one per kind
};

// Loads the configured dataset. For "mnist", path resolution order is
// explicit file paths, then data_dir, then $VELU_KIT_DATA_DIR, looking for
// train-images-idx3-ubyte / train-labels-idx1-ubyte.
ImageDataset load_dataset(const DatasetSpec& spec);

// Builds the run's network for a given input dimension and class count,
// honoring the replacement scenario.
Mlp build_model(const TrainConfig& config, std::size_t input_dim, int classes);

// Deterministic given config.seed. Persists the report (and optional
// checkpoints) under config.out_dir when set. Throws DivergenceDetectedError
// when a loss value goes non-finite.
TrainReport run_training(const TrainConfig& config);

// Runs every (kind, seed) combination of the base config and aggregates
// per-kind epoch metrics. Reports land in out_dir as <kind>_<seed>.json plus
// aggregate JSON/CSV and accuracy/loss SVG curves when out_dir is set.
ComparisonReport run_comparison(const TrainConfig& base, const std::vector<ActivationKind>& kinds,
                                const std::vector<std::uint64_t>& seeds);

// Finite-difference verification of the analytic gradients: frozen-scalar
// derivative, through-stats Jacobian, W2 batch gradient, and end-to-end loss
// gradients. Failures are data (pass flags), not errors.
GradCheckReport run_gradcheck_suite(const GradCheckSpec& spec);

// Histograms of the designated hidden layer's preactivations over the test
// set for two checkpoints of the same architecture. 64 bins over a symmetric
// range derived from both distributions.
std::vector<HistogramRecord> collect_preactivation_histograms(const TrainConfig& config,
                                                              const std::string& before_checkpoint,
                                                              const std::string& after_checkpoint);

// --- serialization ---------------------------------------------------------

std::string train_report_to_json(const TrainReport& report);
TrainReport train_report_from_json(const std::string& text);
void save_train_report(const TrainReport& report, const std::string& path);
TrainReport load_train_report(const std::string& path);

std::string gradcheck_report_to_json(const GradCheckReport& report);
GradCheckReport gradcheck_report_from_json(const std::string& text);

std::string histograms_to_json(const std::vector<HistogramRecord>& records);
std::vector<HistogramRecord> histograms_from_json(const std::string& text);

std::string comparison_report_to_json(const ComparisonReport& report);

// Flat per-epoch rows: run_id,kind,seed,epoch,loss,top1,topk,w2_mean.
void write_comparison_csv(const ComparisonReport& report, const std::string& path);

// Curve CSV with header x,f,df; shortest round-trip float formatting, so the
// bytes are reproducible. The same writer backs the CLI plot command.
void write_curve_csv(const ActivationKind& kind, double lo, double hi, std::size_t n,
                     const std::string& path);

std::string run_label_for(const ActivationKind& kind, std::uint64_t seed);

}  // namespace velu
