#include "wisdomnet/wisdomnet.h"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "wisdomnet/config.hpp"
#include "wisdomnet/data.hpp"
#include "wisdomnet/ensemble.hpp"
#include "wisdomnet/evaluation.hpp"
#include "wisdomnet/member_network.hpp"
#include "wisdomnet/parallel.hpp"
#include "wisdomnet/report.hpp"

namespace wn = wisdomnet;

struct wn_config {
  wn::WisdomConfig value;
};
struct wn_dataset {
  wn::Dataset value;
};
struct wn_member {
  wn::MemberNetwork value;
};
struct wn_layer {
  wn::EnsembleLayer value;
};
struct wn_model {
  wn_layer covid;
  wn_layer ards;
};
struct wn_report_list {
  std::vector<wn::DecisionReport> value;
};

namespace {

thread_local std::string g_last_error;

wn_status status_of(wn::ErrorCode code) {
  switch (code) {
    case wn::ErrorCode::InvalidArgument: return WN_ERR_INVALID_ARGUMENT;
    case wn::ErrorCode::DimensionMismatch: return WN_ERR_DIMENSION;
    case wn::ErrorCode::NonFinite: return WN_ERR_NON_FINITE;
    case wn::ErrorCode::Io: return WN_ERR_IO;
    case wn::ErrorCode::Format: return WN_ERR_FORMAT;
    case wn::ErrorCode::VersionMismatch: return WN_ERR_VERSION;
    case wn::ErrorCode::Checksum: return WN_ERR_CHECKSUM;
    case wn::ErrorCode::Divergence: return WN_ERR_DIVERGENCE;
  }
  return WN_ERR_INTERNAL;
}

template <typename Fn>
wn_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return WN_OK;
  } catch (const wn::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return WN_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return WN_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) wn::fail(wn::ErrorCode::InvalidArgument, std::string(what) + " must not be NULL");
}

wn::Tensor<float> image_from(const float* data, std::size_t length, std::size_t side) {
  need(data, "image");
  const std::size_t expected = side * side * 3;
  wn::require(length == expected, wn::ErrorCode::DimensionMismatch,
              "image length " + std::to_string(length) + " != " + std::to_string(expected));
  return wn::Tensor<float>({side, side, 3}, std::vector<float>(data, data + length));
}

wn_pair to_c(const wn::ProbabilityPair& p) { return {p.p_class0, p.p_class1}; }
wn::ProbabilityPair from_c(const wn_pair& p) { return {p.p_class0, p.p_class1}; }

wn_dispersion to_c(const wn::DispersionStats& s) {
  wn_dispersion d{};
  d.count = s.count;
  for (int c = 0; c < 2; ++c) {
    d.mean[c] = s.classes[c].mean;
    d.stddev[c] = s.classes[c].stddev;
    d.normal_mu[c] = s.classes[c].normal_mu;
    d.normal_sigma[c] = s.classes[c].normal_sigma;
  }
  d.high_variance = s.high_variance ? 1 : 0;
  return d;
}

wn_evaluation to_c(const wn::EvaluationResult& r) {
  wn_evaluation e{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) e.confusion[i][j] = r.confusion[i][j];
  e.total = r.total;
  e.false_negatives = r.false_negatives;
  e.false_positives = r.false_positives;
  e.accuracy = r.accuracy;
  return e;
}

std::vector<wn::ProbabilityPair> pairs_from(const wn_pair* outputs, std::size_t count) {
  if (count > 0) need(outputs, "outputs");
  std::vector<wn::ProbabilityPair> v;
  v.reserve(count);
  for (std::size_t i = 0; i < count; ++i) v.push_back(from_c(outputs[i]));
  return v;
}

std::vector<wn::DecisionReport> predict_all(const wn_model& model, const wn::WisdomConfig& c,
                                            const wn::Dataset& ds) {
  c.policy.validate();
  std::vector<wn::DecisionReport> reports(ds.size());
  wn::parallel_for(ds.size(), c.covid.threads, [&](std::size_t i) {
    const wn::Sample& s = ds.samples[i];
    reports[i] = wn::cascade_predict(model.covid.value, model.ards.value, c.policy, s.image,
                                     s.source_id, c.high_variance_threshold, 1);
  });
  return reports;
}

bool is_image_file(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".pgm" || ext == ".ppm" || ext == ".pbm" || ext == ".pnm" || ext == ".png";
}

}  // namespace

extern "C" {

const char* wn_last_error(void) { return g_last_error.c_str(); }
const char* wn_version(void) { return "1.0.0"; }

// --- config -----------------------------------------------------------------

wn_status wn_config_create(wn_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new wn_config{};
  });
}

wn_status wn_config_load(const char* path, wn_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new wn_config{wn::load_config(path)};
  });
}

wn_status wn_config_set(wn_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    need(cfg, "config");
    need(key, "key");
    need(value, "value");
    cfg->value.set(key, value);
  });
}

wn_status wn_config_validate(const wn_config* cfg) {
  return guarded([&] {
    need(cfg, "config");
    cfg->value.validate();
  });
}

size_t wn_config_input_side(const wn_config* cfg) { return cfg ? cfg->value.input_side : 0; }
double wn_config_high_variance_threshold(const wn_config* cfg) {
  return cfg ? cfg->value.high_variance_threshold : 0.0;
}
void wn_config_free(wn_config* cfg) { delete cfg; }

// --- data -------------------------------------------------------------------

wn_status wn_dataset_generate(const wn_synthetic_spec* spec, uint64_t seed, wn_dataset** out) {
  return guarded([&] {
    need(spec, "spec");
    need(out, "out");
    wn::SyntheticSpec s;
    s.counts = {{wn::ClassTag::Covid, spec->covid},         {wn::ClassTag::Healthy, spec->healthy},
                {wn::ClassTag::Bacterial, spec->bacterial}, {wn::ClassTag::Viral, spec->viral},
                {wn::ClassTag::Ards, spec->ards}};
    s.input_side = spec->input_side;
    s.noise = spec->noise;
    *out = new wn_dataset{wn::generate_synthetic_corpus(s, seed)};
  });
}

wn_status wn_dataset_load_manifest(const char* manifest, size_t input_side, const char* split,
                                   wn_dataset** out) {
  return guarded([&] {
    need(manifest, "manifest");
    need(out, "out");
    std::optional<std::string> filter;
    if (split) filter = split;
    *out = new wn_dataset{wn::load_manifest_dataset(manifest, input_side, filter)};
  });
}

wn_status wn_dataset_split(const wn_dataset* ds, double train_fraction, uint64_t seed,
                           wn_dataset** train, wn_dataset** test) {
  return guarded([&] {
    need(ds, "dataset");
    need(train, "train");
    need(test, "test");
    auto [a, b] = wn::split_dataset(ds->value, train_fraction, seed);
    auto ta = std::make_unique<wn_dataset>(wn_dataset{std::move(a)});
    auto tb = std::make_unique<wn_dataset>(wn_dataset{std::move(b)});
    *train = ta.release();
    *test = tb.release();
  });
}

wn_status wn_dataset_write(const wn_dataset* train, const wn_dataset* test, const char* dir) {
  return guarded([&] {
    need(train, "train");
    need(dir, "dir");
    wn::write_corpus(train->value, test ? test->value : wn::Dataset{}, dir);
  });
}

size_t wn_dataset_size(const wn_dataset* ds) { return ds ? ds->value.size() : 0; }
void wn_dataset_free(wn_dataset* ds) { delete ds; }

wn_status wn_load_image(const char* path, size_t side, float* out, size_t capacity) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    const auto img = wn::load_image(path, side);
    wn::require(capacity >= img.size(), wn::ErrorCode::InvalidArgument,
                "output buffer too small for " + std::to_string(img.size()) + " floats");
    std::copy(img.data().begin(), img.data().end(), out);
  });
}

// --- members ----------------------------------------------------------------

wn_status wn_member_build(uint64_t seed, size_t input_side, wn_member** out) {
  return guarded([&] {
    need(out, "out");
    *out = new wn_member{wn::MemberNetwork(seed, input_side)};
  });
}

wn_status wn_member_load(const char* path, wn_member** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new wn_member{wn::load_weights(path)};
  });
}

wn_status wn_member_save(const wn_member* member, const char* path) {
  return guarded([&] {
    need(member, "member");
    need(path, "path");
    wn::save_weights(member->value, path);
  });
}

wn_status wn_member_forward(const wn_member* member, const float* image, size_t length,
                            wn_pair* out) {
  return guarded([&] {
    need(member, "member");
    need(out, "out");
    *out = to_c(member->value.forward(image_from(image, length, member->value.input_side())));
  });
}

size_t wn_member_input_side(const wn_member* member) {
  return member ? member->value.input_side() : 0;
}
size_t wn_member_parameter_count(const wn_member* member) {
  return member ? member->value.parameter_count() : 0;
}
void wn_member_free(wn_member* member) { delete member; }

// --- layers -----------------------------------------------------------------

wn_status wn_layer_load(const char* dir, wn_layer** out) {
  return guarded([&] {
    need(dir, "dir");
    need(out, "out");
    *out = new wn_layer{wn::load_ensemble(dir)};
  });
}

wn_status wn_layer_save(const wn_layer* layer, const char* dir) {
  return guarded([&] {
    need(layer, "layer");
    need(dir, "dir");
    wn::save_ensemble(layer->value, dir);
  });
}

wn_status wn_layer_predict(const wn_layer* layer, const float* image, size_t length,
                           wn_pair* aggregated, wn_pair* members, size_t capacity) {
  return guarded([&] {
    need(layer, "layer");
    need(aggregated, "aggregated");
    const auto pred = layer->value.predict(image_from(image, length, layer->value.input_side()));
    *aggregated = to_c(pred.aggregated);
    if (members)
      for (std::size_t i = 0; i < std::min(capacity, pred.members.size()); ++i)
        members[i] = to_c(pred.members[i]);
  });
}

size_t wn_layer_lambda(const wn_layer* layer) { return layer ? layer->value.lambda() : 0; }
uint64_t wn_layer_evaluations(const wn_layer* layer) {
  return layer ? layer->value.evaluations() : 0;
}
void wn_layer_free(wn_layer* layer) { delete layer; }

// --- primitives -------------------------------------------------------------

wn_status wn_aggregate_mean(const wn_pair* outputs, size_t count, wn_pair* out) {
  return guarded([&] {
    need(out, "out");
    *out = to_c(wn::aggregate_mean(pairs_from(outputs, count)));
  });
}

wn_status wn_decide(wn_pair aggregated, double negative_threshold, int strict, int* is_negative) {
  return guarded([&] {
    need(is_negative, "is_negative");
    wn::DecisionPolicy policy;
    policy.negative_threshold = negative_threshold;
    policy.strict = strict != 0;
    policy.validate();
    *is_negative = wn::decide_covid(from_c(aggregated), policy) == wn::Decision::Negative;
  });
}

wn_status wn_diagnose(const wn_pair* outputs, size_t count, double threshold, wn_dispersion* out) {
  return guarded([&] {
    need(out, "out");
    *out = to_c(wn::diagnose(pairs_from(outputs, count), threshold));
  });
}

// --- model ------------------------------------------------------------------

wn_status wn_model_train(const wn_config* cfg, const wn_dataset* train, wn_model** out) {
  return guarded([&] {
    need(cfg, "config");
    need(train, "train");
    need(out, "out");
    cfg->value.validate();
    wn::WisdomNet net = wn::train_wisdomnet(train->value, cfg->value.covid, cfg->value.ards);
    *out = new wn_model{{std::move(net.covid)}, {std::move(net.ards)}};
  });
}

wn_status wn_model_save(const wn_model* model, const char* dir) {
  return guarded([&] {
    need(model, "model");
    need(dir, "dir");
    wn::save_wisdomnet({model->covid.value, model->ards.value}, dir);
  });
}

wn_status wn_model_load(const char* dir, wn_model** out) {
  return guarded([&] {
    need(dir, "dir");
    need(out, "out");
    wn::WisdomNet net = wn::load_wisdomnet(dir);
    *out = new wn_model{{std::move(net.covid)}, {std::move(net.ards)}};
  });
}

size_t wn_model_input_side(const wn_model* model) {
  return model ? model->covid.value.input_side() : 0;
}

const wn_layer* wn_model_layer(const wn_model* model, wn_layer_role role) {
  if (!model) return nullptr;
  return role == WN_LAYER_COVID ? &model->covid : &model->ards;
}

void wn_model_free(wn_model* model) { delete model; }

// --- prediction and reports ------------------------------------------------

wn_status wn_model_predict_dataset(const wn_model* model, const wn_config* cfg,
                                   const wn_dataset* ds, wn_report_list** out) {
  return guarded([&] {
    need(model, "model");
    need(cfg, "config");
    need(ds, "dataset");
    need(out, "out");
    *out = new wn_report_list{predict_all(*model, cfg->value, ds->value)};
  });
}

wn_status wn_model_predict_directory(const wn_model* model, const wn_config* cfg, const char* dir,
                                     wn_report_list** out) {
  return guarded([&] {
    need(model, "model");
    need(cfg, "config");
    need(dir, "dir");
    need(out, "out");
    std::vector<std::filesystem::path> files;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec))
      if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
    if (ec) wn::fail(wn::ErrorCode::Io, std::string("cannot list image directory ") + dir);
    std::sort(files.begin(), files.end());
    wn_dataset ds;
    for (const auto& f : files) {
      wn::Sample s;
      s.image = wn::load_image(f, model->covid.value.input_side());
      s.source_id = f.filename().string();
      ds.value.samples.push_back(std::move(s));
    }
    *out = new wn_report_list{predict_all(*model, cfg->value, ds.value)};
  });
}

wn_status wn_reports_read(const char* path, wn_report_list** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new wn_report_list{wn::read_reports(path)};
  });
}

size_t wn_report_count(const wn_report_list* list) { return list ? list->value.size() : 0; }

wn_status wn_report_get(const wn_report_list* list, size_t index, wn_report_summary* out) {
  return guarded([&] {
    need(list, "list");
    need(out, "out");
    wn::require(index < list->value.size(), wn::ErrorCode::InvalidArgument, "report index out of range");
    const wn::DecisionReport& r = list->value[index];
    wn_report_summary s{};
    s.subject_id = r.subject_id.c_str();
    s.covid = to_c(r.covid);
    s.is_negative = r.decision == wn::Decision::Negative;
    s.has_ards = r.ards_probability.has_value();
    s.ards_probability = r.ards_probability.value_or(0.0);
    s.ards = r.ards ? to_c(*r.ards) : wn_pair{0.0, 0.0};
    s.covid_members = r.covid_members.size();
    s.ards_members = r.ards_members.size();
    s.covid_dispersion = to_c(r.covid_dispersion);
    *out = s;
  });
}

wn_status wn_report_members(const wn_report_list* list, size_t index, wn_layer_role role,
                            wn_pair* out, size_t capacity, size_t* count) {
  return guarded([&] {
    need(list, "list");
    need(count, "count");
    wn::require(index < list->value.size(), wn::ErrorCode::InvalidArgument, "report index out of range");
    const auto& members = role == WN_LAYER_COVID ? list->value[index].covid_members
                                                 : list->value[index].ards_members;
    *count = members.size();
    if (out)
      for (std::size_t i = 0; i < std::min(capacity, members.size()); ++i) out[i] = to_c(members[i]);
  });
}

wn_status wn_reports_emit(const wn_report_list* list, const char* dir) {
  return guarded([&] {
    need(list, "list");
    need(dir, "dir");
    wn::emit_reports(list->value, dir);
  });
}

void wn_report_list_free(wn_report_list* list) { delete list; }

// --- evaluation -------------------------------------------------------------

wn_status wn_model_evaluate(const wn_model* model, const wn_config* cfg, const wn_dataset* test,
                            wn_evaluation* out, wn_report_list** reports) {
  return guarded([&] {
    need(model, "model");
    need(cfg, "config");
    need(test, "test");
    need(out, "out");
    const auto& c = cfg->value;
    wn::EvaluationResult r = wn::evaluate(model->covid.value, model->ards.value, c.policy,
                                          wn::covid_task(test->value), c.high_variance_threshold,
                                          c.covid.threads);
    *out = to_c(r);
    if (reports) *reports = new wn_report_list{std::move(r.reports)};
  });
}

wn_status wn_evaluate_splits(const wn_config* cfg, const wn_dataset* ds, const double* fractions,
                             size_t count, wn_split_row* rows) {
  return guarded([&] {
    need(cfg, "config");
    need(ds, "dataset");
    if (count > 0) {
      need(fractions, "fractions");
      need(rows, "rows");
    }
    const auto result = wn::evaluate_splits(ds->value, {fractions, count}, cfg->value);
    for (std::size_t i = 0; i < result.size(); ++i)
      rows[i] = {result[i].train_fraction, result[i].test_fraction, to_c(result[i].result)};
  });
}

wn_status wn_write_evaluation_csv(const wn_split_row* rows, size_t count, const char* path) {
  return guarded([&] {
    need(path, "path");
    if (count > 0) need(rows, "rows");
    std::vector<wn::SplitRow> table;
    for (std::size_t i = 0; i < count; ++i) {
      wn::SplitRow r;
      r.train_fraction = rows[i].train_fraction;
      r.test_fraction = rows[i].test_fraction;
      const wn_evaluation& e = rows[i].result;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) r.result.confusion[a][b] = e.confusion[a][b];
      r.result.total = e.total;
      r.result.false_negatives = e.false_negatives;
      r.result.false_positives = e.false_positives;
      r.result.accuracy = e.accuracy;
      table.push_back(std::move(r));
    }
    wn::write_file_atomic(path, wn::evaluation_csv(table));
  });
}

wn_status wn_write_confusion_csv(const wn_evaluation* result, const char* path) {
  return guarded([&] {
    need(result, "result");
    need(path, "path");
    wn::EvaluationResult r;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) r.confusion[a][b] = result->confusion[a][b];
    r.total = result->total;
    r.accuracy = result->accuracy;
    wn::write_file_atomic(path, wn::confusion_csv(r));
  });
}

}  // extern "C"
