#include <fstream>
#include <sstream>

#include "velu/errors.hpp"
#include "velu/experiments.hpp"
#include "velu/format.hpp"

#include "json_util.hpp"

namespace velu {

namespace {

using nlohmann::json;

json dataset_to_json(const DatasetSpec& d) {
  return json{{"kind", d.kind},
              {"images_path", d.images_path},
              {"labels_path", d.labels_path},
              {"data_dir", d.data_dir},
              {"limit", d.limit},
              {"train_fraction", d.train_fraction},
              {"blobs_seed", d.blobs_seed},
              {"n_per_class", d.n_per_class},
              {"classes", d.classes},
              {"dim", d.dim},
              {"spread", d.spread}};
}

DatasetSpec dataset_from_json(const json& j) {
  DatasetSpec d;
  d.kind = j.at("kind").get<std::string>();
  d.images_path = j.at("images_path").get<std::string>();
  d.labels_path = j.at("labels_path").get<std::string>();
  d.data_dir = j.at("data_dir").get<std::string>();
  d.limit = j.at("limit").get<std::size_t>();
  d.train_fraction = j.at("train_fraction").get<double>();
  d.blobs_seed = j.at("blobs_seed").get<std::uint64_t>();
  d.n_per_class = j.at("n_per_class").get<std::size_t>();
  d.classes = j.at("classes").get<int>();
  d.dim = j.at("dim").get<std::size_t>();
  d.spread = j.at("spread").get<double>();
  return d;
}

json config_to_json(const TrainConfig& c) {
  json j;
  j["dataset"] = dataset_to_json(c.dataset);
  j["hidden_widths"] = c.hidden_widths;
  j["activation"] = detail::activation_to_json(c.activation);
  j["scenario"] = c.scenario == Scenario::Full ? "full" : "head_only";
  j["optimizer"] = detail::optimizer_to_json(c.optimizer);
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["seed"] = c.seed;
  j["clipnorm"] = c.clipnorm ? json(*c.clipnorm) : json(nullptr);
  j["grad_mode"] = c.grad_mode == GradMode::Fast ? "fast" : "exact";
  j["topk"] = c.topk;
  j["hist_layer"] = c.hist_layer;
  j["save_checkpoints"] = c.save_checkpoints;
  j["out_dir"] = c.out_dir;
  j["run_label"] = c.run_label;
  // Convenience echo of where the W2 term acts for this run.
  j["w2_mode"] = c.activation.is_velu()
                     ? detail::velu_params_to_json(c.activation.velu_params())["w2_mode"]
                     : json(nullptr);
  return j;
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.dataset = dataset_from_json(j.at("dataset"));
  c.hidden_widths = j.at("hidden_widths").get<std::vector<std::size_t>>();
  c.activation = detail::activation_from_json(j.at("activation"));
  const std::string sc = j.at("scenario").get<std::string>();
  if (sc == "full") {
    c.scenario = Scenario::Full;
  } else if (sc == "head_only") {
    c.scenario = Scenario::HeadOnly;
  } else {
    throw Error("unknown scenario '" + sc + "'");
  }
  c.optimizer = detail::optimizer_from_json(j.at("optimizer"));
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.clipnorm = j.at("clipnorm").is_null() ? std::optional<double>{}
                                          : std::optional<double>(j.at("clipnorm").get<double>());
  c.grad_mode = j.at("grad_mode").get<std::string>() == "fast" ? GradMode::Fast : GradMode::Exact;
  c.topk = j.at("topk").get<int>();
  c.hist_layer = j.at("hist_layer").get<std::size_t>();
  c.save_checkpoints = j.at("save_checkpoints").get<bool>();
  c.out_dir = j.at("out_dir").get<std::string>();
  c.run_label = j.at("run_label").get<std::string>();
  return c;
}

json epoch_to_json(const EpochMetrics& m) {
  return json{{"epoch", m.epoch},
              {"train_loss", m.train_loss},
              {"test_top1", m.test_top1},
              {"test_topk", m.test_topk},
              {"w2_mean_per_layer", m.w2_mean_per_layer},
              {"clamp_hits", m.clamp_hits}};
}

EpochMetrics epoch_from_json(const json& j) {
  EpochMetrics m;
  m.epoch = j.at("epoch").get<std::size_t>();
  m.train_loss = j.at("train_loss").get<double>();
  m.test_top1 = j.at("test_top1").get<double>();
  m.test_topk = j.at("test_topk").get<double>();
  m.w2_mean_per_layer = j.at("w2_mean_per_layer").get<std::vector<double>>();
  m.clamp_hits = j.at("clamp_hits").get<std::size_t>();
  return m;
}

json report_to_json_obj(const TrainReport& r) {
  json j;
  j["format"] = "velu-kit-train-report";
  j["version"] = 1;
  j["config"] = config_to_json(r.config);
  json epochs = json::array();
  for (const EpochMetrics& m : r.epochs) epochs.push_back(epoch_to_json(m));
  j["epochs"] = std::move(epochs);
  j["wall_seconds"] = r.wall_seconds;
  j["param_digest"] = r.param_digest;
  j["checkpoint_before"] = r.checkpoint_before;
  j["checkpoint_after"] = r.checkpoint_after;
  return j;
}

TrainReport report_from_json_obj(const json& j) {
  if (j.value("format", "") != "velu-kit-train-report" || j.value("version", 0) != 1) {
    throw Error("not a velu-kit train report");
  }
  TrainReport r;
  r.config = config_from_json(j.at("config"));
  for (const auto& e : j.at("epochs")) r.epochs.push_back(epoch_from_json(e));
  r.wall_seconds = j.at("wall_seconds").get<double>();
  r.param_digest = j.at("param_digest").get<std::string>();
  r.checkpoint_before = j.at("checkpoint_before").get<std::string>();
  r.checkpoint_after = j.at("checkpoint_after").get<std::string>();
  return r;
}

}  // namespace

std::string train_report_to_json(const TrainReport& report) {
  return report_to_json_obj(report).dump(2);
}

TrainReport train_report_from_json(const std::string& text) {
  return report_from_json_obj(json::parse(text));
}

void save_train_report(const TrainReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open report file for writing: " + path);
  out << train_report_to_json(report) << "\n";
}

TrainReport load_train_report(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open report file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return train_report_from_json(ss.str());
}

std::string gradcheck_report_to_json(const GradCheckReport& report) {
  json j;
  j["format"] = "velu-kit-gradcheck-report";
  j["version"] = 1;
  j["pass"] = report.pass;
  j["max_rel_err"] = report.max_rel_err;
  json suites = json::array();
  for (const GradCheckSubSuite& s : report.suites) {
    json sj;
    sj["name"] = s.name;
    sj["tolerance"] = s.tolerance;
    sj["checks"] = s.checks;
    sj["max_rel_err"] = s.max_rel_err;
    sj["pass"] = s.pass;
    json worst = json::array();
    for (const GradCheckEntry& e : s.worst) {
      worst.push_back(json{{"label", e.label},
                           {"analytic", e.analytic},
                           {"numeric", e.numeric},
                           {"abs_err", e.abs_err},
                           {"rel_err", e.rel_err}});
    }
    sj["worst"] = std::move(worst);
    suites.push_back(std::move(sj));
  }
  j["suites"] = std::move(suites);
  return j.dump(2);
}

GradCheckReport gradcheck_report_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.value("format", "") != "velu-kit-gradcheck-report" || j.value("version", 0) != 1) {
    throw Error("not a velu-kit gradcheck report");
  }
  GradCheckReport r;
  r.pass = j.at("pass").get<bool>();
  r.max_rel_err = j.at("max_rel_err").get<double>();
  for (const auto& sj : j.at("suites")) {
    GradCheckSubSuite s;
    s.name = sj.at("name").get<std::string>();
    s.tolerance = sj.at("tolerance").get<double>();
    s.checks = sj.at("checks").get<std::size_t>();
    s.max_rel_err = sj.at("max_rel_err").get<double>();
    s.pass = sj.at("pass").get<bool>();
    for (const auto& ej : sj.at("worst")) {
      s.worst.push_back(GradCheckEntry{ej.at("label").get<std::string>(),
                                       ej.at("analytic").get<double>(),
                                       ej.at("numeric").get<double>(),
                                       ej.at("abs_err").get<double>(),
                                       ej.at("rel_err").get<double>()});
    }
    r.suites.push_back(std::move(s));
  }
  return r;
}

std::string histograms_to_json(const std::vector<HistogramRecord>& records) {
  json arr = json::array();
  for (const HistogramRecord& rec : records) {
    arr.push_back(json{{"epoch_tag", rec.epoch_tag},
                       {"layer_index", rec.layer_index},
                       {"bin_edges", rec.bin_edges},
                       {"counts", rec.counts},
                       {"value_std", rec.value_std}});
  }
  return json{{"format", "velu-kit-histograms"}, {"version", 1}, {"records", arr}}.dump(2);
}

std::vector<HistogramRecord> histograms_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.value("format", "") != "velu-kit-histograms" || j.value("version", 0) != 1) {
    throw Error("not a velu-kit histogram file");
  }
  std::vector<HistogramRecord> records;
  for (const auto& rj : j.at("records")) {
    HistogramRecord rec;
    rec.epoch_tag = rj.at("epoch_tag").get<std::string>();
    rec.layer_index = rj.at("layer_index").get<std::size_t>();
    rec.bin_edges = rj.at("bin_edges").get<std::vector<double>>();
    rec.counts = rj.at("counts").get<std::vector<std::size_t>>();
    rec.value_std = rj.at("value_std").get<double>();
    records.push_back(std::move(rec));
  }
  return records;
}

std::string comparison_report_to_json(const ComparisonReport& report) {
  json j;
  j["format"] = "velu-kit-comparison";
  j["version"] = 1;
  json runs = json::array();
  for (const TrainReport& run : report.runs) runs.push_back(json::parse(train_report_to_json(run)));
  j["runs"] = std::move(runs);
  json aggs = json::array();
  for (const KindAggregate& agg : report.aggregates) {
    json aj;
    aj["kind"] = agg.kind;
    json epochs = json::array();
    for (const EpochAggregate& ea : agg.epochs) {
      epochs.push_back(json{{"epoch", ea.epoch},
                            {"mean_loss", ea.mean_loss},
                            {"min_loss", ea.min_loss},
                            {"max_loss", ea.max_loss},
                            {"mean_top1", ea.mean_top1},
                            {"min_top1", ea.min_top1},
                            {"max_top1", ea.max_top1},
                            {"mean_topk", ea.mean_topk},
                            {"min_topk", ea.min_topk},
                            {"max_topk", ea.max_topk}});
    }
    aj["epochs"] = std::move(epochs);
    aggs.push_back(std::move(aj));
  }
  j["aggregates"] = std::move(aggs);
  return j.dump(2);
}

void write_comparison_csv(const ComparisonReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open CSV file for writing: " + path);
  out << "run_id,kind,seed,epoch,loss,top1,topk,w2_mean\n";
  for (const TrainReport& run : report.runs) {
    const std::string kind = activation_name(run.config.activation);
    for (const EpochMetrics& m : run.epochs) {
      double w2_mean = 0.0;
      if (!m.w2_mean_per_layer.empty()) {
        for (double v : m.w2_mean_per_layer) w2_mean += v;
        w2_mean /= static_cast<double>(m.w2_mean_per_layer.size());
      }
      out << run.config.run_label << "," << kind << "," << run.config.seed << "," << m.epoch << ","
          << double_to_string(m.train_loss) << "," << double_to_string(m.test_top1) << ","
          << double_to_string(m.test_topk) << "," << double_to_string(w2_mean) << "\n";
    }
  }
}

void write_curve_csv(const ActivationKind& kind, double lo, double hi, std::size_t n,
                     const std::string& path) {
  const auto samples = eval_curve(kind, lo, hi, n);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open CSV file for writing: " + path);
  out << "x,f,df\n";
  for (const CurveSample& s : samples) {
    out << double_to_string(s.x) << "," << double_to_string(s.f) << "," << double_to_string(s.df)
        << "\n";
  }
}

std::string run_label_for(const ActivationKind& kind, std::uint64_t seed) {
  return activation_name(kind) + "_" + std::to_string(seed);
}

}  // namespace velu
