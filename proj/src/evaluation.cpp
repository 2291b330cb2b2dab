#include "wisdomnet/evaluation.hpp"

#include <cstdio>

#include "wisdomnet/parallel.hpp"

namespace wisdomnet {

EvaluationResult evaluate(const EnsembleLayer& covid, const EnsembleLayer& ards,
                          const DecisionPolicy& policy, const Dataset& test_set,
                          double high_variance_threshold, std::size_t threads) {
  require(!test_set.empty(), ErrorCode::InvalidArgument, "evaluate: empty test set");
  EvaluationResult r;
  r.reports.resize(test_set.size());
  parallel_for(test_set.size(), threads, [&](std::size_t i) {
    const Sample& s = test_set.samples[i];
    r.reports[i] = cascade_predict(covid, ards, policy, s.image, s.source_id,
                                   high_variance_threshold, 1);
  });
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    const std::size_t truth = test_set.samples[i].label_index() == kLabelPositive ? 0 : 1;
    const std::size_t decided = r.reports[i].decision == Decision::Positive ? 0 : 1;
    ++r.confusion[truth][decided];
  }
  r.total = test_set.size();
  r.false_negatives = r.confusion[0][1];
  r.false_positives = r.confusion[1][0];
  r.accuracy = static_cast<double>(r.confusion[0][0] + r.confusion[1][1]) /
               static_cast<double>(r.total);
  return r;
}

std::vector<SplitRow> evaluate_splits(const Dataset& dataset, std::span<const double> fractions,
                                      const WisdomConfig& config) {
  config.validate();
  std::vector<SplitRow> rows;
  for (double f : fractions) {
    auto [train, test] = split_dataset(dataset, f, config.covid.seed);
    const Dataset test_task = covid_task(test);
    require(!test_task.empty(), ErrorCode::InvalidArgument,
            "evaluate_splits: fraction " + std::to_string(f) + " leaves no test samples");
    const WisdomNet net = train_wisdomnet(train, config.covid, config.ards);
    SplitRow row;
    row.train_fraction = f;
    row.test_fraction = 1.0 - f;
    row.result = evaluate(net.covid, net.ards, config.policy, test_task,
                          config.high_variance_threshold, config.covid.threads);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string evaluation_csv(std::span<const SplitRow> rows) {
  std::string out =
      "train_fraction,test_fraction,accuracy,true_positive,false_negative,false_positive,"
      "true_negative,total\n";
  char buf[256];
  for (const SplitRow& row : rows) {
    const auto& c = row.result.confusion;
    std::snprintf(buf, sizeof buf, "%.4f,%.4f,%.6f,%zu,%zu,%zu,%zu,%zu\n", row.train_fraction,
                  row.test_fraction, row.result.accuracy, c[0][0], c[0][1], c[1][0], c[1][1],
                  row.result.total);
    out += buf;
  }
  return out;
}

std::string confusion_csv(const EvaluationResult& result) {
  const auto& c = result.confusion;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.6f,%zu,%zu,%zu,%zu,%zu\n", result.accuracy, c[0][0], c[0][1],
                c[1][0], c[1][1], result.total);
  return std::string("accuracy,true_positive,false_negative,false_positive,true_negative,total\n") +
         buf;
}

}  // namespace wisdomnet
