// wisdomnet command-line driver. Talks to the library only through the C API.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wisdomnet/wisdomnet.h"

namespace fs = std::filesystem;

namespace {

struct CliFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(wn_status s, const std::string& what) {
  if (s != WN_OK) throw CliFailure(what + ": " + wn_last_error());
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using ConfigPtr = std::unique_ptr<wn_config, Deleter<wn_config, wn_config_free>>;
using DatasetPtr = std::unique_ptr<wn_dataset, Deleter<wn_dataset, wn_dataset_free>>;
using ModelPtr = std::unique_ptr<wn_model, Deleter<wn_model, wn_model_free>>;
using ReportsPtr = std::unique_ptr<wn_report_list, Deleter<wn_report_list, wn_report_list_free>>;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> lambda;
  std::optional<double> neg_threshold;
  std::optional<std::size_t> input_side;
  std::optional<std::size_t> threads;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "key = value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "master seed for both layers");
  cmd->add_option("--lambda", o.lambda, "selected members per layer");
  cmd->add_option("--neg-threshold", o.neg_threshold, "minimum p_negative for a Negative call");
  cmd->add_option("--input-side", o.input_side, "square input side in pixels");
  cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
}

std::string number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Loads the config file (if any) and applies command-line overrides. Runs
// before anything is written so a bad config leaves no partial output.
ConfigPtr build_config(const CommonOptions& o) {
  wn_config* raw = nullptr;
  if (o.config.empty())
    check(wn_config_create(&raw), "config");
  else
    check(wn_config_load(o.config.c_str(), &raw), "config");
  ConfigPtr cfg(raw);
  auto set = [&](const char* key, const std::string& value) {
    check(wn_config_set(cfg.get(), key, value.c_str()), std::string("--") + key);
  };
  if (o.seed) set("seed", std::to_string(*o.seed));
  if (o.lambda) set("lambda", std::to_string(*o.lambda));
  if (o.neg_threshold) set("negative_threshold", number(*o.neg_threshold));
  if (o.input_side) set("input_side", std::to_string(*o.input_side));
  if (o.threads) set("threads", std::to_string(*o.threads));
  check(wn_config_validate(cfg.get()), "config");
  return cfg;
}

DatasetPtr load_dataset(const std::string& manifest, std::size_t side, const std::string& split) {
  wn_dataset* raw = nullptr;
  check(wn_dataset_load_manifest(manifest.c_str(), side, split == "all" ? nullptr : split.c_str(),
                                 &raw),
        manifest);
  return DatasetPtr(raw);
}

ModelPtr load_model(const std::string& dir) {
  wn_model* raw = nullptr;
  check(wn_model_load(dir.c_str(), &raw), dir);
  return ModelPtr(raw);
}

void print_reports(const wn_report_list* list) {
  const std::size_t n = wn_report_count(list);
  for (std::size_t i = 0; i < n; ++i) {
    wn_report_summary r{};
    check(wn_report_get(list, i, &r), "report");
    std::printf("%s\t%s\tp_negative=%.6f", r.subject_id, r.is_negative ? "negative" : "positive",
                r.covid.p_class1);
    if (r.has_ards) std::printf("\tp_ards=%.6f", r.ards_probability);
    if (r.covid_dispersion.high_variance) std::printf("\thigh_variance");
    std::printf("\n");
  }
}

void print_evaluation(const wn_evaluation& e) {
  std::printf("accuracy=%.6f total=%zu tp=%zu fn=%zu fp=%zu tn=%zu\n", e.accuracy, e.total,
              e.confusion[0][0], e.confusion[0][1], e.confusion[1][0], e.confusion[1][1]);
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out.flush()) throw CliFailure("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::vector<double> parse_fractions(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string item = text.substr(pos, comma == std::string::npos ? comma : comma - pos);
    if (!item.empty()) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(item, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != item.size()) throw CliFailure("--fractions: not a number: " + item);
      out.push_back(v);
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wisdomnet: two-layer CNN ensemble for chest radiograph triage"};
  app.require_subcommand(1);

  CommonOptions common;

  auto* gen = app.add_subcommand("gen-synthetic", "write a synthetic labelled corpus");
  add_common(gen, common);
  gen->add_option("--out", common.out, "output directory")->required();
  wn_synthetic_spec spec{12, 6, 5, 5, 8, 0, 0.0};
  double gen_train_fraction = 0.6;
  gen->add_option("--covid", spec.covid, "covid images")->capture_default_str();
  gen->add_option("--healthy", spec.healthy, "healthy images")->capture_default_str();
  gen->add_option("--bacterial", spec.bacterial, "bacterial pneumonia images")->capture_default_str();
  gen->add_option("--viral", spec.viral, "viral pneumonia images")->capture_default_str();
  gen->add_option("--ards", spec.ards, "covid images with ARDS")->capture_default_str();
  gen->add_option("--noise", spec.noise, "noise level in [0,1]")->capture_default_str();
  gen->add_option("--train-fraction", gen_train_fraction, "share of the corpus tagged train")
      ->capture_default_str();

  auto* train = app.add_subcommand("train", "train candidate pools, select members, save both layers");
  add_common(train, common);
  std::string manifest;
  std::string split = "train";
  train->add_option("--manifest", manifest, "manifest.tsv")->required()->check(CLI::ExistingFile);
  train->add_option("--split", split, "split to train on (train, test or all)")->capture_default_str();
  train->add_option("--out", common.out, "model directory")->required();

  auto* predict = app.add_subcommand("predict", "run the cascade over an image directory");
  add_common(predict, common);
  std::string model_dir;
  std::string images_dir;
  predict->add_option("--model", model_dir, "model directory")->required()->check(CLI::ExistingDirectory);
  predict->add_option("--images", images_dir, "image directory")->required()->check(CLI::ExistingDirectory);
  predict->add_option("--out", common.out, "report directory")->required();

  auto* evaluate = app.add_subcommand("evaluate", "score a saved model on a labelled split");
  add_common(evaluate, common);
  std::string eval_split = "test";
  evaluate->add_option("--model", model_dir, "model directory")->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("--manifest", manifest, "manifest.tsv")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--split", eval_split, "split to score (train, test or all)")->capture_default_str();
  evaluate->add_option("--out", common.out, "directory for evaluation.csv and reports");

  auto* splits = app.add_subcommand("evaluate-splits", "retrain and score at several train fractions");
  add_common(splits, common);
  std::string fractions_text = "0.2,0.3,0.4,0.5,0.6,0.7,0.8";
  std::string splits_split = "all";
  splits->add_option("--manifest", manifest, "manifest.tsv")->required()->check(CLI::ExistingFile);
  splits->add_option("--split", splits_split, "records to draw from (train, test or all)")
      ->capture_default_str();
  splits->add_option("--fractions", fractions_text, "comma-separated train fractions")
      ->capture_default_str();
  splits->add_option("--out", common.out, "directory for evaluation.csv");

  auto* diag = app.add_subcommand("diagnose", "member dispersion per subject from a reports file");
  add_common(diag, common);
  std::string reports_path;
  diag->add_option("--reports", reports_path, "reports.jsonl")->required()->check(CLI::ExistingFile);
  diag->add_option("--out", common.out, "directory for diagnostics.tsv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "wisdomnet: error: %s\n", e.what());
    return 2;
  }

  try {
    const ConfigPtr cfg = build_config(common);
    const std::size_t side = wn_config_input_side(cfg.get());

    if (*gen) {
      spec.input_side = side;
      const std::uint64_t seed = common.seed.value_or(0);
      wn_dataset* raw = nullptr;
      check(wn_dataset_generate(&spec, seed, &raw), "gen-synthetic");
      const DatasetPtr all(raw);
      wn_dataset* tr = nullptr;
      wn_dataset* te = nullptr;
      check(wn_dataset_split(all.get(), gen_train_fraction, seed, &tr, &te), "gen-synthetic");
      const DatasetPtr train_set(tr);
      const DatasetPtr test_set(te);
      check(wn_dataset_write(train_set.get(), test_set.get(), common.out.c_str()), common.out);
      std::printf("wrote %zu train and %zu test images to %s\n", wn_dataset_size(train_set.get()),
                  wn_dataset_size(test_set.get()), common.out.c_str());
    } else if (*train) {
      const DatasetPtr ds = load_dataset(manifest, side, split);
      wn_model* raw = nullptr;
      check(wn_model_train(cfg.get(), ds.get(), &raw), "train");
      const ModelPtr model(raw);
      check(wn_model_save(model.get(), common.out.c_str()), common.out);
      std::printf("trained on %zu images; saved covid (lambda=%zu) and ards (lambda=%zu) layers to %s\n",
                  wn_dataset_size(ds.get()), wn_layer_lambda(wn_model_layer(model.get(), WN_LAYER_COVID)),
                  wn_layer_lambda(wn_model_layer(model.get(), WN_LAYER_ARDS)), common.out.c_str());
    } else if (*predict) {
      const ModelPtr model = load_model(model_dir);
      wn_report_list* raw = nullptr;
      check(wn_model_predict_directory(model.get(), cfg.get(), images_dir.c_str(), &raw), images_dir);
      const ReportsPtr reports(raw);
      check(wn_reports_emit(reports.get(), common.out.c_str()), common.out);
      print_reports(reports.get());
    } else if (*evaluate) {
      const ModelPtr model = load_model(model_dir);
      const DatasetPtr ds = load_dataset(manifest, wn_model_input_side(model.get()), eval_split);
      wn_evaluation result{};
      wn_report_list* raw = nullptr;
      check(wn_model_evaluate(model.get(), cfg.get(), ds.get(), &result, &raw), "evaluate");
      const ReportsPtr reports(raw);
      if (!common.out.empty()) {
        check(wn_reports_emit(reports.get(), common.out.c_str()), common.out);
        const std::string csv = (fs::path(common.out) / "evaluation.csv").string();
        check(wn_write_confusion_csv(&result, csv.c_str()), csv);
      }
      print_evaluation(result);
    } else if (*splits) {
      const std::vector<double> fractions = parse_fractions(fractions_text);
      const DatasetPtr ds = load_dataset(manifest, side, splits_split);
      std::vector<wn_split_row> rows(fractions.size());
      check(wn_evaluate_splits(cfg.get(), ds.get(), fractions.data(), fractions.size(), rows.data()),
            "evaluate-splits");
      if (!common.out.empty()) {
        fs::create_directories(common.out);
        const std::string csv = (fs::path(common.out) / "evaluation.csv").string();
        check(wn_write_evaluation_csv(rows.data(), rows.size(), csv.c_str()), csv);
      }
      std::printf("train_fraction\ttest_fraction\taccuracy\tfn\tfp\n");
      for (const wn_split_row& r : rows)
        std::printf("%.2f\t%.2f\t%.4f\t%zu\t%zu\n", r.train_fraction, r.test_fraction,
                    r.result.accuracy, r.result.false_negatives, r.result.false_positives);
    } else if (*diag) {
      wn_report_list* raw = nullptr;
      check(wn_reports_read(reports_path.c_str(), &raw), reports_path);
      const ReportsPtr reports(raw);
      // Dispersion is recomputed so the flag follows the current threshold.
      const double threshold = wn_config_high_variance_threshold(cfg.get());
      std::string table =
          "subject\tlayer\tcount\tmean_class1\tstd_class1\tnormal_mu\tnormal_sigma\thigh_variance\n";
      std::vector<wn_pair> members;
      const std::size_t n = wn_report_count(reports.get());
      for (std::size_t i = 0; i < n; ++i) {
        wn_report_summary r{};
        check(wn_report_get(reports.get(), i, &r), "report");
        for (wn_layer_role role : {WN_LAYER_COVID, WN_LAYER_ARDS}) {
          if (role == WN_LAYER_ARDS && !r.has_ards) continue;
          std::size_t count = 0;
          check(wn_report_members(reports.get(), i, role, nullptr, 0, &count), "report");
          members.resize(count);
          check(wn_report_members(reports.get(), i, role, members.data(), count, &count), "report");
          wn_dispersion d{};
          check(wn_diagnose(members.data(), count, threshold, &d), r.subject_id);
          char line[512];
          std::snprintf(line, sizeof line, "%s\t%s\t%zu\t%.6f\t%.6f\t%.6f\t%.6f\t%d\n", r.subject_id,
                        role == WN_LAYER_COVID ? "covid" : "ards", d.count, d.mean[1], d.stddev[1],
                        d.normal_mu[1], d.normal_sigma[1], d.high_variance);
          table += line;
        }
      }
      if (!common.out.empty()) {
        write_text(fs::path(common.out) / "diagnostics.tsv", table);
      }
      std::fputs(table.c_str(), stdout);
    }
  } catch (const CliFailure& e) {
    std::fprintf(stderr, "wisdomnet: error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "wisdomnet: error: %s\n", e.what());
    return 1;
  }
  return 0;
}
