#include "folk/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

#include "folk/error.hpp"

namespace folk {

using nlohmann::json;

Standardization Standardization::fit(const std::vector<LabeledExample>& examples) {
  Standardization s;
  if (examples.empty()) return s;
  const std::size_t d = examples.front().features.size();
  s.mean.assign(d, 0.0);
  s.stddev.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& e : examples)
      if (!std::isnan(e.features[j])) {
        sum += e.features[j];
        ++n;
      }
    double mean = n ? sum / static_cast<double>(n) : 0.0;
    double ss = 0;
    for (const auto& e : examples)
      if (!std::isnan(e.features[j])) ss += (e.features[j] - mean) * (e.features[j] - mean);
    double sd = n ? std::sqrt(ss / static_cast<double>(n)) : 0.0;
    // Relative cutoff: a column that only varies by rounding noise is constant.
    if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) sd = 0.0;
    s.mean[j] = mean;
    s.stddev[j] = sd;
  }
  return s;
}

std::vector<double> Standardization::apply(const std::vector<double>& raw) const {
  if (raw.size() != mean.size())
    input_error("feature length " + std::to_string(raw.size()) + " does not match model schema length " +
                std::to_string(mean.size()));
  std::vector<double> out(raw.size());
  for (std::size_t j = 0; j < raw.size(); ++j)
    out[j] = (std::isnan(raw[j]) || stddev[j] == 0.0) ? 0.0 : (raw[j] - mean[j]) / stddev[j];
  return out;
}

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(-m)) without overflow.
double logistic_loss(double margin) {
  if (margin > 0) return std::log1p(std::exp(-margin));
  return -margin + std::log1p(std::exp(margin));
}

}  // namespace

double logistic_objective(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                          const std::vector<double>& w, double b, double reg, std::vector<double>* grad) {
  const std::size_t n = x.size(), d = w.size();
  double loss = 0;
  if (grad) grad->assign(d + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double z = b;
    for (std::size_t j = 0; j < d; ++j) z += w[j] * x[i][j];
    double yi = y[i];
    loss += logistic_loss(yi * z);
    if (grad) {
      double g = -yi * sigmoid(-yi * z);
      for (std::size_t j = 0; j < d; ++j) (*grad)[j] += g * x[i][j];
      (*grad)[d] += g;
    }
  }
  double inv_n = 1.0 / static_cast<double>(n);
  loss *= inv_n;
  double w2 = 0;
  for (double v : w) w2 += v * v;
  loss += 0.5 * reg * w2;
  if (grad) {
    for (std::size_t j = 0; j < d; ++j) (*grad)[j] = (*grad)[j] * inv_n + reg * w[j];
    (*grad)[d] *= inv_n;
  }
  return loss;
}

std::uint64_t schema_hash(const std::vector<std::string>& columns) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& c : columns) {
    for (unsigned char ch : c) {
      h ^= ch;
      h *= 1099511628211ULL;
    }
    h ^= '\n';
    h *= 1099511628211ULL;
  }
  return h;
}

ClassifierModel train(const std::vector<LabeledExample>& examples, const TrainOptions& options) {
  bool has_pos = false, has_neg = false;
  for (const auto& e : examples) (e.label > 0 ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) input_error("train: need at least one expert and one novice example");
  if (!(options.regularization > 0)) input_error("train: regularization must be positive");

  ClassifierModel m;
  m.regularization = options.regularization;
  m.standardization = Standardization::fit(examples);
  const std::size_t d = m.standardization.mean.size();
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  double max_norm2 = 0;
  for (const auto& e : examples) {
    x.push_back(m.standardization.apply(e.features));
    y.push_back(e.label > 0 ? 1 : -1);
    double n2 = 1.0;  // bias input
    for (double v : x.back()) n2 += v * v;
    max_norm2 = std::max(max_norm2, n2);
  }
  // Fixed step 1/L with L bounding the Hessian of the mean logistic loss.
  const double step = 1.0 / (0.25 * max_norm2 + options.regularization);
  m.weights.assign(d, 0.0);
  std::vector<double> grad;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    logistic_objective(x, y, m.weights, m.bias, options.regularization, &grad);
    double gn = 0;
    for (double g : grad) gn += g * g;
    if (std::sqrt(gn) < options.gradient_tolerance) break;
    for (std::size_t j = 0; j < d; ++j) m.weights[j] -= step * grad[j];
    m.bias -= step * grad[d];
  }
  m.iterations = it;
  return m;
}

double ClassifierModel::score(const std::vector<double>& raw) const {
  auto x = standardization.apply(raw);
  double z = bias;
  for (std::size_t j = 0; j < x.size(); ++j) z += weights[j] * x[j];
  return sigmoid(z);
}

Classification classify(const ClassifierModel& model, const std::vector<double>& raw) {
  Classification c;
  c.score = model.score(raw);
  c.expert = c.score >= 0.5;
  return c;
}

std::string ClassifierModel::to_json() const {
  json j;
  j["columns"] = columns;
  j["weights"] = weights;
  j["bias"] = bias;
  j["regularization"] = regularization;
  j["standardization"] = {{"mean", standardization.mean}, {"stddev", standardization.stddev}};
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(schema_hash));
  j["schema_hash"] = hex;
  return j.dump(2) + "\n";
}

ClassifierModel ClassifierModel::from_json(const std::string& text) {
  ClassifierModel m;
  try {
    json j = json::parse(text);
    m.columns = j.at("columns").get<std::vector<std::string>>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.regularization = j.at("regularization").get<double>();
    m.standardization.mean = j.at("standardization").at("mean").get<std::vector<double>>();
    m.standardization.stddev = j.at("standardization").at("stddev").get<std::vector<double>>();
    m.schema_hash = std::stoull(j.at("schema_hash").get<std::string>(), nullptr, 16);
  } catch (const std::exception& e) {
    input_error(std::string("model file: ") + e.what());
  }
  if (m.weights.size() != m.standardization.mean.size() || m.weights.size() != m.standardization.stddev.size() ||
      m.weights.size() != m.columns.size())
    input_error("model file: inconsistent vector lengths");
  if (folk::schema_hash(m.columns) != m.schema_hash) input_error("model file: schema hash mismatch");
  return m;
}

namespace {

// Deterministic Fisher-Yates; std::shuffle's draw sequence is not portable.
template <class T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

Metrics cross_validate(const std::vector<LabeledExample>& examples, int folds, std::uint64_t seed,
                       const TrainOptions& options) {
  if (folds < 2) input_error("cross_validate: folds must be >= 2");
  if (static_cast<std::size_t>(folds) > examples.size()) input_error("cross_validate: more folds than examples");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < examples.size(); ++i) (examples[i].label > 0 ? pos : neg).push_back(i);
  std::mt19937_64 rng(seed);
  shuffle(pos, rng);
  shuffle(neg, rng);
  std::vector<int> fold_of(examples.size());
  std::size_t k = 0;
  for (std::size_t i : pos) fold_of[i] = static_cast<int>(k++ % static_cast<std::size_t>(folds));
  for (std::size_t i : neg) fold_of[i] = static_cast<int>(k++ % static_cast<std::size_t>(folds));

  struct FoldCounts {
    int tp = 0, fp = 0, fn = 0;
  };
  std::vector<FoldCounts> counts(static_cast<std::size_t>(folds));
#pragma omp parallel for schedule(dynamic)
  for (int f = 0; f < folds; ++f) {
    std::vector<LabeledExample> train_set;
    std::vector<const LabeledExample*> test_set;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      if (fold_of[i] == f)
        test_set.push_back(&examples[i]);
      else
        train_set.push_back(examples[i]);
    }
    ClassifierModel m = train(train_set, options);
    FoldCounts c;
    for (const auto* e : test_set) {
      bool predicted = classify(m, e->features).expert;
      bool actual = e->label > 0;
      if (predicted && actual) ++c.tp;
      if (predicted && !actual) ++c.fp;
      if (!predicted && actual) ++c.fn;
    }
    counts[static_cast<std::size_t>(f)] = c;
  }
  double p_sum = 0, r_sum = 0;
  int p_n = 0, r_n = 0;
  for (const auto& c : counts) {
    if (c.tp + c.fp > 0) {
      p_sum += static_cast<double>(c.tp) / (c.tp + c.fp);
      ++p_n;
    }
    if (c.tp + c.fn > 0) {
      r_sum += static_cast<double>(c.tp) / (c.tp + c.fn);
      ++r_n;
    }
  }
  Metrics m;
  m.precision = p_n ? p_sum / p_n : 0.0;
  m.recall = r_n ? r_sum / r_n : 0.0;
  m.f_score = (m.precision + m.recall) > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

SelfTrainState self_train(std::vector<LabeledExample> initial, const std::vector<LabeledExample>& pool,
                          const LabelOracle& oracle, const SelfTrainOptions& options) {
  SelfTrainState state;
  state.training_set = std::move(initial);
  std::set<std::string> labeled;
  for (const auto& e : state.training_set) labeled.insert(e.user_id);
  std::vector<const LabeledExample*> remaining;
  for (const auto& e : pool)
    if (!labeled.count(e.user_id)) remaining.push_back(&e);

  auto count_pos = [](const std::vector<LabeledExample>& v) {
    return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](const auto& e) { return e.label > 0; }));
  };

  for (int it = 1; it <= options.max_iterations; ++it) {
    state.iteration = it;
    state.model = train(state.training_set, options.train);
    SelfTrainIteration rec;
    rec.iteration = it;
    rec.training_size = state.training_set.size();
    rec.positives = count_pos(state.training_set);
    int folds = static_cast<int>(std::min<std::size_t>(
        {static_cast<std::size_t>(options.cv_folds), rec.positives, rec.training_size - rec.positives}));
    if (folds >= 2) rec.metrics = cross_validate(state.training_set, folds, options.seed, options.train);

    std::vector<const LabeledExample*> predicted;
    for (const auto* e : remaining)
      if (classify(state.model, e->features).expert) predicted.push_back(e);
    rec.new_queries = predicted.size();
    state.history.push_back(rec);
    if (predicted.empty()) break;

    std::set<std::string> added;
    for (const auto* e : predicted) {
      std::optional<int> label = oracle(e->user_id);
      if (!label) {
        state.halted = true;
        state.halt_reason = "oracle has no label for user '" + e->user_id + "'";
        break;
      }
      LabeledExample ex = *e;
      ex.label = *label > 0 ? 1 : -1;
      state.training_set.push_back(std::move(ex));
      added.insert(e->user_id);
    }
    std::erase_if(remaining, [&](const auto* e) { return added.count(e->user_id) > 0; });
    if (state.halted) break;
  }
  state.positives_found = count_pos(state.training_set);
  state.model = train(state.training_set, options.train);
  return state;
}

std::vector<int> equal_frequency_bins(const std::vector<double>& values, int bins) {
  std::vector<double> sorted(values);
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> cuts;
  const std::size_t n = sorted.size();
  for (int k = 1; k < bins; ++k) {
    std::size_t idx = static_cast<std::size_t>(k) * n / static_cast<std::size_t>(bins);
    if (idx >= n) break;
    if (cuts.empty() || sorted[idx] > cuts.back()) cuts.push_back(sorted[idx]);
  }
  std::vector<int> out;
  out.reserve(values.size());
  for (double v : values)
    out.push_back(static_cast<int>(std::upper_bound(cuts.begin(), cuts.end(), v) - cuts.begin()));
  return out;
}

namespace {

double entropy(const std::map<int, int>& counts, int total) {
  double h = 0;
  for (const auto& [k, c] : counts) {
    if (c == 0) continue;
    double p = static_cast<double>(c) / total;
    h -= p * std::log(p);
  }
  return h;
}

std::map<int, std::map<int, int>> contingency(const std::vector<double>& values, const std::vector<int>& labels,
                                              int bins) {
  auto b = equal_frequency_bins(values, bins);
  std::map<int, std::map<int, int>> table;
  for (std::size_t i = 0; i < values.size(); ++i) ++table[b[i]][labels[i] > 0 ? 1 : -1];
  return table;
}

}  // namespace

double information_gain(const std::vector<double>& values, const std::vector<int>& labels, int bins) {
  const int n = static_cast<int>(values.size());
  if (n == 0) return 0.0;
  std::map<int, int> class_counts;
  for (int l : labels) ++class_counts[l > 0 ? 1 : -1];
  double h = entropy(class_counts, n);
  double cond = 0;
  for (const auto& [bin, cc] : contingency(values, labels, bins)) {
    int nb = 0;
    for (const auto& [c, k] : cc) nb += k;
    cond += static_cast<double>(nb) / n * entropy(cc, nb);
  }
  return std::max(0.0, h - cond);
}

double chi_squared(const std::vector<double>& values, const std::vector<int>& labels, int bins) {
  const int n = static_cast<int>(values.size());
  if (n == 0) return 0.0;
  std::map<int, int> class_counts;
  for (int l : labels) ++class_counts[l > 0 ? 1 : -1];
  double chi = 0;
  for (const auto& [bin, cc] : contingency(values, labels, bins)) {
    int nb = 0;
    for (const auto& [c, k] : cc) nb += k;
    for (const auto& [c, total_c] : class_counts) {
      double expected = static_cast<double>(nb) * total_c / n;
      auto it = cc.find(c);
      double observed = it == cc.end() ? 0.0 : it->second;
      if (expected > 0) chi += (observed - expected) * (observed - expected) / expected;
    }
  }
  return chi;
}

namespace {

// Rank 1 = largest score; tied scores share the average of their positions.
std::vector<double> average_ranks(const std::vector<double>& scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<double> ranks(scores.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

std::vector<FeatureRank> rank_features(const std::vector<LabeledExample>& examples,
                                       const std::vector<std::string>& columns, const TrainOptions& options) {
  int pos = 0, neg = 0;
  for (const auto& e : examples) (e.label > 0 ? pos : neg)++;
  if (pos < 2 || neg < 2) input_error("rank_features: need at least two examples of each class");
  const std::size_t d = columns.size();
  ClassifierModel model = train(examples, options);
  std::vector<int> labels;
  for (const auto& e : examples) labels.push_back(e.label);

  std::vector<FeatureRank> out(d);
  std::vector<double> ig(d), chi(d), mw(d);
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<double> col;
    for (const auto& e : examples) col.push_back(std::isnan(e.features[j]) ? model.standardization.mean[j] : e.features[j]);
    out[j].column = columns[j];
    ig[j] = out[j].info_gain = information_gain(col, labels);
    chi[j] = out[j].chi_squared = chi_squared(col, labels);
    mw[j] = out[j].model_weight = std::abs(model.weights[j]);
  }
  auto r_ig = average_ranks(ig), r_chi = average_ranks(chi), r_mw = average_ranks(mw);
  for (std::size_t j = 0; j < d; ++j) {
    out[j].rank_info_gain = r_ig[j];
    out[j].rank_chi_squared = r_chi[j];
    out[j].rank_model_weight = r_mw[j];
    out[j].average_rank = (r_ig[j] + r_chi[j] + r_mw[j]) / 3.0;
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.average_rank < b.average_rank; });
  return out;
}

std::vector<LabeledExample> make_examples(const FeatureTable& table,
                                          const std::vector<std::pair<std::string, UserLabel>>& labels) {
  std::map<std::string, UserLabel> by_user(labels.begin(), labels.end());
  std::vector<LabeledExample> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    auto it = by_user.find(table.user_ids[i]);
    if (it == by_user.end() || it->second == UserLabel::unlabeled) continue;
    out.push_back({table.user_ids[i], table.rows[i], it->second == UserLabel::expert ? 1 : -1});
  }
  return out;
}

}  // namespace folk
