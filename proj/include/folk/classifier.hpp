#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "folk/features.hpp"

namespace folk {

struct LabeledExample {
  std::string user_id;
  std::vector<double> features;  // raw; standardization lives in the model
  int label = -1;                // +1 expert, -1 novice
};

struct Standardization {
  std::vector<double> mean;
  std::vector<double> stddev;  // 0 marks a constant column

  static Standardization fit(const std::vector<LabeledExample>& examples);
  std::vector<double> apply(const std::vector<double>& raw) const;
};

/// L2-regularized logistic regression over standardized features.
struct ClassifierModel {
  std::vector<double> weights;
  double bias = 0;
  double regularization = 1e-2;
  Standardization standardization;
  std::vector<std::string> columns;
  std::uint64_t schema_hash = 0;
  int iterations = 0;

  double score(const std::vector<double>& raw) const;

  std::string to_json() const;
  static ClassifierModel from_json(const std::string& text);
};

std::uint64_t schema_hash(const std::vector<std::string>& columns);

struct TrainOptions {
  double regularization = 1e-2;
  int max_iterations = 10000;
  double gradient_tolerance = 1e-6;
};

ClassifierModel train(const std::vector<LabeledExample>& examples, const TrainOptions& options = {});

/// Mean regularized logistic loss and its gradient (bias last) at the given
/// parameters, on already-standardized inputs.
double logistic_objective(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                          const std::vector<double>& w, double b, double reg, std::vector<double>* grad);

struct Classification {
  bool expert = false;
  double score = 0;
};
/// Expert iff score >= 0.5.
Classification classify(const ClassifierModel& model, const std::vector<double>& raw);

struct Metrics {
  double precision = 0;
  double recall = 0;
  double f_score = 0;
};

/// Stratified k-fold cross validation on the expert class. Per-fold
/// precision/recall are averaged over the folds where they are defined
/// (a 0/0 ratio is skipped); F is the harmonic mean of those averages.
Metrics cross_validate(const std::vector<LabeledExample>& examples, int folds, std::uint64_t seed,
                       const TrainOptions& options = {});

/// Calls back with a user id, returns the label or nullopt when the oracle
/// cannot answer (which halts self-training).
using LabelOracle = std::function<std::optional<int>(const std::string&)>;

struct SelfTrainIteration {
  int iteration = 0;
  std::size_t training_size = 0;
  std::size_t positives = 0;
  std::size_t new_queries = 0;
  Metrics metrics;
};

struct SelfTrainState {
  int iteration = 0;
  std::vector<LabeledExample> training_set;
  std::size_t positives_found = 0;
  std::vector<SelfTrainIteration> history;
  ClassifierModel model;
  bool halted = false;   // oracle failure
  std::string halt_reason;
};

struct SelfTrainOptions {
  int max_iterations = 8;
  int cv_folds = 10;
  std::uint64_t seed = 1;
  TrainOptions train;
};

SelfTrainState self_train(std::vector<LabeledExample> initial, const std::vector<LabeledExample>& pool,
                          const LabelOracle& oracle, const SelfTrainOptions& options = {});

enum class RankMethod { info_gain, chi_squared, model_weight };

struct FeatureRank {
  std::string column;
  double info_gain = 0;
  double chi_squared = 0;
  double model_weight = 0;
  double rank_info_gain = 0;
  double rank_chi_squared = 0;
  double rank_model_weight = 0;
  double average_rank = 0;
};

/// Equal-frequency bin index of each value (ties share a bin).
std::vector<int> equal_frequency_bins(const std::vector<double>& values, int bins = 10);
double information_gain(const std::vector<double>& values, const std::vector<int>& labels, int bins = 10);
double chi_squared(const std::vector<double>& values, const std::vector<int>& labels, int bins = 10);

/// Sorted by average rank (ascending), ties by column order.
std::vector<FeatureRank> rank_features(const std::vector<LabeledExample>& examples,
                                       const std::vector<std::string>& columns, const TrainOptions& options = {});

/// Joins a feature table with a label list; unlabeled users are skipped.
std::vector<LabeledExample> make_examples(const FeatureTable& table,
                                          const std::vector<std::pair<std::string, UserLabel>>& labels);

}  // namespace folk
