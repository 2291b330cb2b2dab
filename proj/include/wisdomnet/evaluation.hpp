#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "wisdomnet/config.hpp"
#include "wisdomnet/data.hpp"
#include "wisdomnet/ensemble.hpp"

namespace wisdomnet {

struct EvaluationResult {
  // confusion[truth][decision]; index 0 = positive, 1 = negative.
  std::array<std::array<std::size_t, 2>, 2> confusion{};
  std::size_t total = 0;
  std::size_t false_negatives = 0;
  std::size_t false_positives = 0;
  double accuracy = 0.0;
  std::vector<DecisionReport> reports;  // in test-set order
};

/// Runs the cascade over a COVID-labelled test set. Subjects are processed
/// in parallel; results keep test-set order.
EvaluationResult evaluate(const EnsembleLayer& covid, const EnsembleLayer& ards,
                          const DecisionPolicy& policy, const Dataset& test_set,
                          double high_variance_threshold = kDefaultHighVarianceThreshold,
                          std::size_t threads = 0);

struct SplitRow {
  double train_fraction = 0.0;
  double test_fraction = 0.0;
  EvaluationResult result;
};

/// For each fraction: stratified split, train both layers, evaluate on the
/// held-out part. Rows follow the input order.
std::vector<SplitRow> evaluate_splits(const Dataset& dataset, std::span<const double> fractions,
                                      const WisdomConfig& config);

std::string evaluation_csv(std::span<const SplitRow> rows);
/// Single-row CSV of one evaluation's confusion counts.
std::string confusion_csv(const EvaluationResult& result);

}  // namespace wisdomnet
