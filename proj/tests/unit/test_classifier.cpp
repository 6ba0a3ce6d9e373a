#include <doctest.h>

#include <cmath>
#include <random>

#include "folk/classifier.hpp"
#include "folk/synthetic.hpp"

using doctest::Approx;

namespace {

std::vector<folk::LabeledExample> toy(std::uint64_t seed, int n, double gap) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.3);
  std::vector<folk::LabeledExample> out;
  for (int i = 0; i < n; ++i) {
    int y = i % 2 == 0 ? 1 : -1;
    out.push_back({"u" + std::to_string(i), {y * gap + noise(rng), noise(rng)}, y});
  }
  return out;
}

std::vector<folk::LabeledExample> synthetic_examples(std::uint64_t seed, std::vector<std::string>* columns = nullptr) {
  folk::SyntheticSpec spec;
  spec.seed = seed;
  auto syn = folk::generate_synthetic(spec);
  auto table = folk::extract_features(folk::ingest_synthetic(syn));
  if (columns) *columns = table.columns;
  return folk::make_examples(table, syn.labels);
}

}  // namespace

TEST_CASE("separable toy set is fit exactly") {
  auto ex = toy(1, 40, 2.0);
  auto m = folk::train(ex);
  for (const auto& e : ex) CHECK(folk::classify(m, e.features).expert == (e.label > 0));
  auto cv = folk::cross_validate(ex, 10, 3);
  CHECK(cv.precision == 1.0);
  CHECK(cv.recall == 1.0);
  CHECK(cv.f_score == 1.0);
}

TEST_CASE("constant features predict the majority class") {
  std::vector<folk::LabeledExample> ex;
  for (int i = 0; i < 10; ++i) ex.push_back({"u" + std::to_string(i), {1.0, 2.0}, i < 7 ? -1 : 1});
  auto m = folk::train(ex);
  CHECK_FALSE(folk::classify(m, {1.0, 2.0}).expert);
  CHECK(m.standardization.stddev[0] == 0.0);
}

TEST_CASE("gradient matches finite differences at the optimum") {
  auto ex = toy(2, 30, 0.5);
  auto m = folk::train(ex);
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (const auto& e : ex) {
    x.push_back(m.standardization.apply(e.features));
    y.push_back(e.label);
  }
  std::vector<double> grad;
  folk::logistic_objective(x, y, m.weights, m.bias, m.regularization, &grad);
  const double h = 1e-6;
  for (std::size_t k = 0; k <= m.weights.size(); ++k) {
    auto w = m.weights;
    double b = m.bias;
    auto at = [&](double delta) {
      auto ww = w;
      double bb = b;
      if (k < w.size()) ww[k] += delta;
      else bb += delta;
      return folk::logistic_objective(x, y, ww, bb, m.regularization, nullptr);
    };
    double fd = (at(h) - at(-h)) / (2 * h);
    CHECK(std::abs(fd - grad[k]) < 1e-4);
    CHECK(std::abs(grad[k]) < 1e-4);
  }
  // Away from the optimum as well.
  std::vector<double> w0{0.3, -0.7};
  folk::logistic_objective(x, y, w0, 0.2, m.regularization, &grad);
  for (std::size_t k = 0; k < 2; ++k) {
    auto wp = w0, wm = w0;
    wp[k] += h;
    wm[k] -= h;
    double fd = (folk::logistic_objective(x, y, wp, 0.2, m.regularization, nullptr) -
                 folk::logistic_objective(x, y, wm, 0.2, m.regularization, nullptr)) /
                (2 * h);
    CHECK(std::abs(fd - grad[k]) < 1e-6);
  }
}

TEST_CASE("score boundary and sign symmetry") {
  folk::ClassifierModel m;
  m.weights = {0.0, 0.0};
  m.standardization.mean = {0.0, 0.0};
  m.standardization.stddev = {1.0, 1.0};
  CHECK(folk::classify(m, {3.0, -2.0}).score == 0.5);
  CHECK(folk::classify(m, {3.0, -2.0}).expert);
  m.weights = {1.0, 2.0};
  CHECK(folk::classify(m, {2.0, 2.0}).expert);
  CHECK_FALSE(folk::classify(m, {-2.0, -2.0}).expert);
}

TEST_CASE("all-negative predictions have zero recall") {
  std::vector<folk::LabeledExample> ex;
  for (int i = 0; i < 20; ++i) ex.push_back({"u" + std::to_string(i), {1.0}, i < 16 ? -1 : 1});
  auto cv = folk::cross_validate(ex, 4, 1);
  CHECK(cv.recall == 0.0);
}

TEST_CASE("model json round trip keeps scores") {
  auto ex = toy(3, 20, 1.0);
  auto m = folk::train(ex);
  m.columns = {"f0", "f1"};
  m.schema_hash = folk::schema_hash(m.columns);
  auto back = folk::ClassifierModel::from_json(m.to_json());
  for (const auto& e : ex) CHECK(folk::classify(back, e.features).score == Approx(folk::classify(m, e.features).score).epsilon(1e-12));
  CHECK(folk::schema_hash({"a", "b"}) != folk::schema_hash({"b", "a"}));
}

TEST_CASE("synthetic experts are separable under cross validation") {
  auto ex = synthetic_examples(1);
  auto cv = folk::cross_validate(ex, 10, 1);
  CHECK(cv.f_score >= 0.9);
}

TEST_CASE("self training grows the training set until fixpoint") {
  auto ex = synthetic_examples(2);
  std::map<std::string, int> truth;
  for (const auto& e : ex) truth[e.user_id] = e.label;
  std::vector<folk::LabeledExample> initial, pool;
  int pos = 0, neg = 0;
  for (const auto& e : ex) {
    bool take = (e.label > 0 && pos < 3) || (e.label < 0 && neg < 10);
    if (take) {
      initial.push_back(e);
      (e.label > 0 ? pos : neg)++;
    }
    pool.push_back(e);
  }
  auto oracle = [&](const std::string& u) -> std::optional<int> { return truth.at(u); };
  auto state = folk::self_train(initial, pool, oracle);
  REQUIRE(state.history.size() >= 2);
  for (std::size_t i = 1; i < state.history.size(); ++i)
    CHECK(state.history[i].training_size > state.history[i - 1].training_size);
  CHECK(state.history.back().new_queries == 0);
  CHECK_FALSE(state.halted);

  // Pool without experts: nothing to add after the first iteration.
  std::vector<folk::LabeledExample> novices;
  for (const auto& e : pool)
    if (e.label < 0) novices.push_back(e);
  auto none = folk::self_train(initial, novices, oracle);
  CHECK(none.training_set.size() == initial.size() + none.history.front().new_queries);

  // Pool equal to the training set: immediate fixpoint.
  auto same = folk::self_train(initial, initial, oracle);
  CHECK(same.history.size() == 1);
  CHECK(same.training_set.size() == initial.size());
}

TEST_CASE("self training halts when the oracle cannot answer") {
  auto ex = synthetic_examples(3);
  std::vector<folk::LabeledExample> initial;
  int pos = 0, neg = 0;
  for (const auto& e : ex)
    if ((e.label > 0 && pos++ < 3) || (e.label < 0 && neg++ < 10)) initial.push_back(e);
  auto state = folk::self_train(initial, ex, [](const std::string&) { return std::optional<int>{}; });
  CHECK(state.halted);
  CHECK(state.training_set.size() == initial.size());
}

TEST_CASE("feature ranking") {
  std::mt19937_64 rng(9);
  std::vector<folk::LabeledExample> ex;
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 200; ++i) {
    int y = i % 4 == 0 ? 1 : -1;
    ex.push_back({"u" + std::to_string(i), {static_cast<double>(y), u(rng)}, y});
  }
  std::vector<double> perfect, noise;
  std::vector<int> labels;
  for (const auto& e : ex) {
    perfect.push_back(e.features[0]);
    noise.push_back(e.features[1]);
    labels.push_back(e.label);
  }
  double h = -(0.25 * std::log(0.25) + 0.75 * std::log(0.75));
  CHECK(folk::information_gain(perfect, labels) == Approx(h).epsilon(1e-9));
  auto ranks = folk::rank_features(ex, {"label", "noise"});
  CHECK(ranks.front().column == "label");

  // Noise gain sits below the 95th percentile of shuffled-label gains.
  double observed = folk::information_gain(noise, labels);
  std::vector<double> shuffled_gains;
  for (int k = 0; k < 200; ++k) {
    auto l = labels;
    std::shuffle(l.begin(), l.end(), rng);
    shuffled_gains.push_back(folk::information_gain(noise, l));
  }
  std::sort(shuffled_gains.begin(), shuffled_gains.end());
  CHECK(observed <= shuffled_gains[190]);
}

TEST_CASE("sapling depth ranks in the top three on synthetic users") {
  std::vector<std::string> columns;
  auto ex = synthetic_examples(1, &columns);
  auto ranks = folk::rank_features(ex, columns);
  bool found = false;
  for (std::size_t i = 0; i < 3 && i < ranks.size(); ++i) found |= ranks[i].column.rfind("sapling_depth", 0) == 0;
  CHECK(found);
}
