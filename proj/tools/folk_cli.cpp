// Batch front end: every subcommand reads plain files, writes artifacts into
// --out and records a manifest that `folk rerun` replays.
#include <CLI11.hpp>
#include <json.hpp>

#include <omp.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "folk/annotation.hpp"
#include "folk/classifier.hpp"
#include "folk/error.hpp"
#include "folk/evaluation.hpp"
#include "folk/features.hpp"
#include "folk/pipeline.hpp"
#include "folk/stem.hpp"
#include "folk/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitConvergence = 3;
constexpr int kExitInvariant = 4;

struct Run {
  std::vector<std::string> args;  // without --out/--threads
  fs::path out;
  json config = json::object();
  bool converged = true;
};

fs::path artifact(const Run& run, const std::string& name) { return run.out / name; }

void write_manifest(const Run& run) {
  json m;
  m["tool"] = "folk";
  m["cwd"] = fs::current_path().string();
  m["args"] = run.args;
  m["config"] = run.config;
  folk::write_file(artifact(run, "manifest.json"), m.dump(2) + "\n");
}

// Expert users from a labels CSV or a one-id-per-line list.
std::vector<std::string> load_experts(const fs::path& path) {
  std::string text = folk::read_file(path);
  std::vector<std::string> out;
  if (text.find(',') != std::string::npos) {
    for (const auto& [user, label] : folk::parse_labels(text))
      if (label == folk::UserLabel::expert) out.push_back(user);
    return out;
  }
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty() && line[0] != '#') out.push_back(line);
  }
  return out;
}

// TSV edges, or the popular tree of a folksonomy JSON.
folk::ReferenceTaxonomy load_reference(const fs::path& path) {
  std::string text = folk::read_file(path);
  auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    auto f = folk::Folksonomy::from_json(text);
    return folk::as_reference(folk::LabeledTree::from_folksonomy(f, f.popular().root));
  }
  return folk::ReferenceTaxonomy::parse(text);
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      folk::input_error("bad number '" + item + "' in list '" + text + "'");
    }
  }
  return out;
}

struct LearnOptions {
  double damping = 0.5;
  int max_sweeps = 2000;
  int stable_window = 10;
  int top_k = 40;
  double divisor = 4.0;
  double multiplier = 2.0;
  int max_rounds = 5;
  bool polish = true;
  std::string f_mode = "modified";
  std::string kernel = "parallel";

  void add(CLI::App* cmd) {
    cmd->add_option("--lambda", damping, "Damping factor")->capture_default_str()->check(CLI::Range(0.0, 0.99));
    cmd->add_option("--max-sweeps", max_sweeps, "Sweep budget")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--stable-window", stable_window, "Sweeps with unchanged exemplars that end the run")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--top-k", top_k, "Tags compared per node")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--divisor", divisor, "Shared-tag count that saturates similarity")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--multiplier", multiplier, "Expert preference multiplier (m3)")->capture_default_str();
    cmd->add_option("--max-rounds", max_rounds, "Snowball rounds")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--polish", polish, "Hill-climb the extracted configuration")->capture_default_str();
    cmd->add_option("--f-mode", f_mode, "Parent constraint")
        ->capture_default_str()
        ->check(CLI::IsMember({"modified", "original"}));
    cmd->add_option("--kernel", kernel, "Sweep kernel")->capture_default_str()->check(CLI::IsMember({"parallel", "reference"}));
  }

  folk::LearnConfig config() const {
    folk::LearnConfig c;
    c.rap.damping = damping;
    c.rap.max_sweeps = max_sweeps;
    c.rap.stable_window = stable_window;
    c.rap.polish = polish;
    c.rap.f_mode = f_mode == "original" ? folk::FConstraint::original : folk::FConstraint::modified;
    c.rap.kernel = kernel == "reference" ? folk::SweepKernel::reference : folk::SweepKernel::parallel;
    c.similarity.top_k = top_k;
    c.similarity.divisor = divisor;
    c.expert_multiplier = multiplier;
    c.max_rounds = max_rounds;
    return c;
  }

  json to_json() const {
    return {{"lambda", damping},        {"max_sweeps", max_sweeps}, {"stable_window", stable_window},
            {"top_k", top_k},           {"divisor", divisor},       {"multiplier", multiplier},
            {"max_rounds", max_rounds}, {"polish", polish},         {"f_mode", f_mode},
            {"kernel", kernel}};
  }
};

json metrics_json(const folk::Metrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f_score", m.f_score}};
}

folk::ClassifierModel with_schema(folk::ClassifierModel m, const std::vector<std::string>& columns) {
  m.columns = columns;
  m.schema_hash = folk::schema_hash(columns);
  return m;
}

// Subcommand bodies. Each fills Run::config and writes its artifacts.

struct IngestCmd {
  std::string corpus;
  void operator()(Run& run) const {
    auto c = folk::ingest_saplings(corpus);
    json s{{"users", c.users.size()}, {"saplings", c.saplings.size()}, {"nodes", c.nodes.size()}};
    run.config = {{"corpus", corpus}};
    std::cout << s.dump() << "\n";
    if (!run.out.empty()) folk::write_file(artifact(run, "summary.json"), s.dump(2) + "\n");
  }
};

struct FeaturesCmd {
  std::string corpus;
  void operator()(Run& run) const {
    auto c = folk::ingest_saplings(corpus);
    run.config = {{"corpus", corpus}};
    folk::write_file(artifact(run, "features.csv"), folk::extract_features(c).to_csv());
  }
};

struct TrainCmd {
  std::string features, labels;
  int folds = 10;
  std::uint64_t rng = 1;
  double regularization = 1e-2;

  void operator()(Run& run) const {
    auto table = folk::FeatureTable::from_csv(folk::read_file(features));
    auto examples = folk::make_examples(table, folk::load_labels(labels));
    folk::TrainOptions opt;
    opt.regularization = regularization;
    auto model = with_schema(folk::train(examples, opt), table.columns);
    auto cv = folk::cross_validate(examples, folds, rng, opt);
    auto ranks = folk::rank_features(examples, table.columns, opt);
    run.config = {{"features", features}, {"labels", labels}, {"folds", folds}, {"rng", rng},
                  {"regularization", regularization}};
    folk::write_file(artifact(run, "model.json"), model.to_json());
    json m{{"examples", examples.size()}, {"cv", metrics_json(cv)}};
    folk::write_file(artifact(run, "metrics.json"), m.dump(2) + "\n");
    std::string csv = "column,info_gain,chi_squared,model_weight,rank_info_gain,rank_chi_squared,rank_model_weight,average_rank\n";
    char buf[256];
    for (const auto& r : ranks) {
      std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f,%.1f,%.1f,%.1f,%.4f\n", r.info_gain, r.chi_squared, r.model_weight,
                    r.rank_info_gain, r.rank_chi_squared, r.rank_model_weight, r.average_rank);
      csv += r.column + buf;
    }
    folk::write_file(artifact(run, "ranking.csv"), csv);
    std::cout << "cv_f " << cv.f_score << "\n";
  }
};

struct SelfTrainCmd {
  std::string features, labels;
  double initial_fraction = 0.3;
  int max_iterations = 8;
  int folds = 10;
  std::uint64_t rng = 1;

  void operator()(Run& run) const {
    auto table = folk::FeatureTable::from_csv(folk::read_file(features));
    auto label_list = folk::load_labels(labels);
    auto labeled = folk::make_examples(table, label_list);
    std::map<std::string, int> oracle_labels;
    for (const auto& e : labeled) oracle_labels[e.user_id] = e.label;

    // Stratified initial split; everyone else in the table is the pool.
    std::mt19937_64 gen(rng);
    std::vector<folk::LabeledExample> pos, neg;
    for (const auto& e : labeled) (e.label > 0 ? pos : neg).push_back(e);
    std::shuffle(pos.begin(), pos.end(), gen);
    std::shuffle(neg.begin(), neg.end(), gen);
    auto take = [&](std::size_t n) {
      return std::max<std::size_t>(std::min<std::size_t>(2, n),
                                   static_cast<std::size_t>(initial_fraction * static_cast<double>(n) + 0.5));
    };
    std::vector<folk::LabeledExample> initial(pos.begin(), pos.begin() + static_cast<long>(take(pos.size())));
    initial.insert(initial.end(), neg.begin(), neg.begin() + static_cast<long>(take(neg.size())));
    if (initial.empty()) folk::input_error("self-train: no labeled users in the feature table");

    std::vector<folk::LabeledExample> pool;
    for (std::size_t r = 0; r < table.rows.size(); ++r) pool.push_back({table.user_ids[r], table.rows[r], 0});

    folk::SelfTrainOptions opt;
    opt.max_iterations = max_iterations;
    opt.cv_folds = folds;
    opt.seed = rng;
    auto oracle = [&](const std::string& user) -> std::optional<int> {
      auto it = oracle_labels.find(user);
      if (it == oracle_labels.end()) return std::nullopt;
      return it->second;
    };
    auto state = folk::self_train(initial, pool, oracle, opt);

    run.config = {{"features", features},       {"labels", labels}, {"initial_fraction", initial_fraction},
                  {"max_iterations", max_iterations}, {"folds", folds},  {"rng", rng}};
    folk::write_file(artifact(run, "model.json"), with_schema(state.model, table.columns).to_json());
    std::string csv = "iteration,training_size,positives,new_queries,precision,recall,f_score\n";
    char buf[256];
    for (const auto& h : state.history) {
      std::snprintf(buf, sizeof buf, "%d,%zu,%zu,%zu,%.6f,%.6f,%.6f\n", h.iteration, h.training_size, h.positives,
                    h.new_queries, h.metrics.precision, h.metrics.recall, h.metrics.f_score);
      csv += buf;
    }
    folk::write_file(artifact(run, "history.csv"), csv);
    json s{{"training_size", state.training_set.size()}, {"positives", state.positives_found},
           {"halted", state.halted}, {"halt_reason", state.halt_reason}};
    folk::write_file(artifact(run, "summary.json"), s.dump(2) + "\n");
  }
};

struct ClassifyCmd {
  std::string features, model;
  void operator()(Run& run) const {
    auto table = folk::FeatureTable::from_csv(folk::read_file(features));
    auto m = folk::ClassifierModel::from_json(folk::read_file(model));
    if (m.schema_hash != folk::schema_hash(table.columns))
      folk::input_error("classify: model columns do not match the feature table");
    std::string experts, scores = "user_id,score,expert\n";
    char buf[64];
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      auto c = folk::classify(m, table.rows[r]);
      if (c.expert) experts += table.user_ids[r] + "\n";
      std::snprintf(buf, sizeof buf, ",%.6f,%d\n", c.score, c.expert ? 1 : 0);
      scores += table.user_ids[r] + buf;
    }
    run.config = {{"features", features}, {"model", model}};
    folk::write_file(artifact(run, "experts.txt"), experts);
    folk::write_file(artifact(run, "scores.csv"), scores);
  }
};

struct LearnCmd {
  std::string corpus, seed, strategy = "m3", experts;
  LearnOptions options;

  void operator()(Run& run) const {
    auto c = folk::ingest_saplings(corpus);
    auto strat = folk::parse_strategy(strategy);
    std::vector<std::string> names;
    if (!experts.empty()) names = load_experts(experts);
    if (strat != folk::Strategy::m1 && experts.empty())
      folk::input_error("learn: strategy " + strategy + " needs --experts");
    auto mask = folk::expert_mask(c, names);
    auto result = folk::run_strategy(c, folk::stem(seed), strat, mask, options.config());

    run.config = {{"corpus", corpus}, {"seed", seed}, {"strategy", strategy}, {"experts", experts},
                  {"rap", options.to_json()}};
    folk::write_file(artifact(run, "folksonomy.json"), result.folksonomy.to_json());
    folk::write_file(artifact(run, "folksonomy.txt"), result.folksonomy.to_text());
    folk::write_file(artifact(run, "diagnostics.csv"), result.rap.diagnostics.to_csv());
    json s{{"saplings", result.saplings.size()},
           {"nodes", result.sample.nodes.size()},
           {"sweeps", result.rap.diagnostics.sweeps.size()},
           {"converged", result.rap.diagnostics.converged},
           {"net_similarity", result.rap.net_similarity},
           {"trees", result.folksonomy.trees.size()},
           {"pct_expert", result.pct_expert}};
    folk::write_file(artifact(run, "summary.json"), s.dump(2) + "\n");
    run.converged = result.rap.diagnostics.converged;
  }
};

struct EvaluateCmd {
  std::string folksonomy, reference, strategy;
  std::uint64_t seed = 0;

  void operator()(Run& run) const {
    auto f = folk::Folksonomy::from_json(folk::read_file(folksonomy));
    auto report = folk::evaluate(f, load_reference(reference));
    report.seed = seed;
    report.strategy = strategy;
    run.config = {{"folksonomy", folksonomy}, {"reference", reference}, {"seed", seed}, {"strategy", strategy}};
    std::string csv = folk::EvalReport::csv_header() + report.csv_row();
    if (!run.out.empty()) folk::write_file(artifact(run, "report.csv"), csv);
    std::cout << csv;
  }
};

struct SweepCmd {
  std::string axis, corpus, reference, seed, experts, values;
  std::uint64_t rng = 1;
  LearnOptions options;

  void operator()(Run& run) const {
    auto c = folk::ingest_saplings(corpus);
    auto mask = folk::expert_mask(c, load_experts(experts));
    auto ref = load_reference(reference);
    std::string list = values;
    if (list.empty()) list = axis == "preference" ? "0,0.5,1,1.5,2,3" : "0,25,50,75,100";
    auto xs = parse_values(list);
    auto result = axis == "preference"
                      ? folk::preference_sweep(c, folk::stem(seed), mask, xs, ref, options.config())
                      : folk::swap_sweep(c, folk::stem(seed), mask, xs, rng, ref, options.config());
    run.config = {{"axis", axis},       {"corpus", corpus}, {"reference", reference}, {"seed", seed},
                  {"experts", experts}, {"values", list},   {"rng", rng},             {"rap", options.to_json()}};
    folk::write_file(artifact(run, "sweep.csv"), result.to_csv());
    std::cout << result.to_csv();
  }
};

struct SynthCmd {
  std::string spec;
  std::optional<std::uint64_t> rng;

  void operator()(Run& run) const {
    folk::SyntheticSpec s;
    if (!spec.empty()) s = folk::SyntheticSpec::from_json(folk::read_file(spec));
    if (rng) s.seed = *rng;
    auto syn = folk::generate_synthetic(s);
    run.config = json::parse(s.to_json());
    folk::write_file(artifact(run, "corpus.jsonl"), folk::corpus_json(syn.saplings));
    folk::write_file(artifact(run, "truth.tsv"), syn.truth.to_tsv());
    folk::write_file(artifact(run, "labels.csv"), syn.labels_csv());
    folk::write_file(artifact(run, "seed.txt"), syn.seed_term + "\n");
    folk::write_file(artifact(run, "spec.json"), s.to_json());
  }
};

struct ReviewCmd {
  std::string first, second, first_name = "first", second_name = "second";
  int max_children = 10;

  void operator()(Run& run) const {
    auto a = folk::Folksonomy::from_json(folk::read_file(first));
    auto b = folk::Folksonomy::from_json(folk::read_file(second));
    auto pair = folk::reduce_tree_pair(folk::LabeledTree::from_folksonomy(a, a.popular().root),
                                       folk::LabeledTree::from_folksonomy(b, b.popular().root), first_name,
                                       second_name, max_children);
    run.config = {{"first", first}, {"second", second}, {"first_name", first_name}, {"second_name", second_name},
                  {"max_children", max_children}};
    folk::write_file(artifact(run, "review.json"), pair.review_json());
    json s{{"removed", pair.removed}, {"first_remaining", pair.first.size()}, {"second_remaining", pair.second.size()},
           {"items", pair.review.size()}};
    folk::write_file(artifact(run, "summary.json"), s.dump(2) + "\n");
  }
};

int exit_code(folk::ErrorKind kind) {
  switch (kind) {
    case folk::ErrorKind::input: return kExitInput;
    case folk::ErrorKind::convergence: return kExitConvergence;
    case folk::ErrorKind::invariant: return kExitInvariant;
  }
  return kExitInvariant;
}

const char* kind_name(folk::ErrorKind kind) {
  switch (kind) {
    case folk::ErrorKind::input: return "input";
    case folk::ErrorKind::convergence: return "convergence";
    case folk::ErrorKind::invariant: return "invariant";
  }
  return "invariant";
}

void single_line(std::string& s) { std::replace(s.begin(), s.end(), '\n', ' '); }

int dispatch(std::vector<std::string> args);

struct RerunCmd {
  std::string manifest;
  int operator()(const fs::path& out, int threads) const {
    json m;
    try {
      m = json::parse(folk::read_file(manifest));
    } catch (const json::exception& e) {
      folk::input_error("rerun: " + std::string(e.what()));
    }
    if (!m.contains("args") || !m.contains("cwd")) folk::input_error("rerun: manifest lacks args or cwd");
    auto args = m["args"].get<std::vector<std::string>>();
    fs::path target = out.empty() ? fs::absolute(fs::path(manifest)).parent_path() : fs::absolute(out);
    fs::current_path(m["cwd"].get<std::string>());
    args.push_back("--out");
    args.push_back(target.string());
    if (threads > 0) {
      args.push_back("--threads");
      args.push_back(std::to_string(threads));
    }
    return dispatch(args);
  }
};

// Removes --out/--threads and their values so the manifest holds only what
// determines the artifacts.
std::vector<std::string> manifest_args(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--out" || a == "--threads") {
      ++i;
      continue;
    }
    if (a.rfind("--out=", 0) == 0 || a.rfind("--threads=", 0) == 0) continue;
    out.push_back(a);
  }
  return out;
}

int dispatch(std::vector<std::string> args) {
  CLI::App app{"Folksonomy learning from user saplings with relational affinity propagation", "folk"};
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 0;
  std::string out;
  app.add_option("--threads", threads, "Worker cap for parallel kernels (0 = runtime default)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  app.add_option("--out", out, "Output directory");

  IngestCmd ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Validate a corpus and print its size");
  c_ingest->add_option("corpus", ingest.corpus)->required()->check(CLI::ExistingFile);

  FeaturesCmd features;
  auto* c_features = app.add_subcommand("features", "User feature table (features.csv)");
  c_features->add_option("corpus", features.corpus)->required()->check(CLI::ExistingFile);

  TrainCmd train;
  auto* c_train = app.add_subcommand("train-experts", "Train the expert classifier (model.json, metrics.json, ranking.csv)");
  c_train->add_option("features", train.features)->required()->check(CLI::ExistingFile);
  c_train->add_option("labels", train.labels)->required()->check(CLI::ExistingFile);
  c_train->add_option("--folds", train.folds, "Cross-validation folds")->capture_default_str()->check(CLI::Range(2, 1000));
  c_train->add_option("--rng", train.rng, "Fold assignment seed")->capture_default_str();
  c_train->add_option("--regularization", train.regularization, "L2 weight")->capture_default_str();

  SelfTrainCmd self;
  auto* c_self = app.add_subcommand("self-train", "Self-training with the labels file as oracle (model.json, history.csv)");
  c_self->add_option("features", self.features)->required()->check(CLI::ExistingFile);
  c_self->add_option("labels", self.labels)->required()->check(CLI::ExistingFile);
  c_self->add_option("--initial-fraction", self.initial_fraction, "Share of each class in the first training set")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  c_self->add_option("--max-iterations", self.max_iterations, "Iteration cap")->capture_default_str()->check(CLI::PositiveNumber);
  c_self->add_option("--folds", self.folds, "Cross-validation folds")->capture_default_str()->check(CLI::Range(2, 1000));
  c_self->add_option("--rng", self.rng, "Split and fold seed")->capture_default_str();

  ClassifyCmd classify;
  auto* c_classify = app.add_subcommand("classify", "Apply a model (experts.txt, scores.csv)");
  c_classify->add_option("features", classify.features)->required()->check(CLI::ExistingFile);
  c_classify->add_option("model", classify.model)->required()->check(CLI::ExistingFile);

  LearnCmd learn;
  auto* c_learn = app.add_subcommand("learn", "Learn a folksonomy for a seed term (folksonomy.json/.txt, diagnostics.csv)");
  c_learn->add_option("corpus", learn.corpus)->required()->check(CLI::ExistingFile);
  c_learn->add_option("--seed", learn.seed, "Seed term")->required();
  c_learn->add_option("--strategy", learn.strategy, "m1, m2 or m3")->capture_default_str()->check(CLI::IsMember({"m1", "m2", "m3"}));
  c_learn->add_option("--experts", learn.experts, "Expert users: labels CSV or one id per line")->check(CLI::ExistingFile);
  learn.options.add(c_learn);

  EvaluateCmd evaluate;
  auto* c_eval = app.add_subcommand("evaluate", "Score the popular tree against a reference (report.csv)");
  c_eval->add_option("folksonomy", evaluate.folksonomy)->required()->check(CLI::ExistingFile);
  c_eval->add_option("reference", evaluate.reference, "TSV edges or folksonomy JSON")->required()->check(CLI::ExistingFile);
  c_eval->add_option("--seed", evaluate.seed, "Seed column of the report")->capture_default_str();
  c_eval->add_option("--strategy", evaluate.strategy, "Strategy column of the report");

  SweepCmd sweep;
  auto* c_sweep = app.add_subcommand("sweep", "Preference or swap robustness sweep (sweep.csv)");
  c_sweep->add_option("axis", sweep.axis, "preference or swap")->required()->check(CLI::IsMember({"preference", "swap"}));
  c_sweep->add_option("corpus", sweep.corpus)->required()->check(CLI::ExistingFile);
  c_sweep->add_option("reference", sweep.reference)->required()->check(CLI::ExistingFile);
  c_sweep->add_option("--seed", sweep.seed, "Seed term")->required();
  c_sweep->add_option("--experts", sweep.experts, "Expert users")->required()->check(CLI::ExistingFile);
  c_sweep->add_option("--values", sweep.values, "Comma list; default 0,0.5,1,1.5,2,3 or 0,25,50,75,100");
  c_sweep->add_option("--rng", sweep.rng, "Swap selection seed")->capture_default_str();
  sweep.options.add(c_sweep);

  SynthCmd synth;
  auto* c_synth = app.add_subcommand("synth", "Synthetic corpus (corpus.jsonl, truth.tsv, labels.csv, seed.txt)");
  c_synth->add_option("spec", synth.spec, "Generator spec JSON; omitted fields keep defaults")->check(CLI::ExistingFile);
  c_synth->add_option("--rng", synth.rng, "Overrides the spec seed");

  ReviewCmd review;
  auto* c_review = app.add_subcommand("review", "Reduce two popular trees for side-by-side review (review.json)");
  c_review->add_option("first", review.first)->required()->check(CLI::ExistingFile);
  c_review->add_option("second", review.second)->required()->check(CLI::ExistingFile);
  c_review->add_option("--first-name", review.first_name)->capture_default_str();
  c_review->add_option("--second-name", review.second_name)->capture_default_str();
  c_review->add_option("--max-children", review.max_children)->capture_default_str()->check(CLI::PositiveNumber);

  RerunCmd rerun;
  auto* c_rerun = app.add_subcommand("rerun", "Replay a manifest; --out defaults to the manifest's directory");
  c_rerun->add_option("manifest", rerun.manifest)->required()->check(CLI::ExistingFile);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  if (threads > 0) omp_set_num_threads(threads);
  if (c_rerun->parsed()) return rerun(out, threads);

  Run run;
  run.args = manifest_args(args);
  if (!out.empty()) {
    run.out = out;
    fs::create_directories(run.out);
  } else if (!c_ingest->parsed() && !c_eval->parsed()) {
    folk::input_error("--out is required");
  }

  if (c_ingest->parsed()) ingest(run);
  else if (c_features->parsed()) features(run);
  else if (c_train->parsed()) train(run);
  else if (c_self->parsed()) self(run);
  else if (c_classify->parsed()) classify(run);
  else if (c_learn->parsed()) learn(run);
  else if (c_eval->parsed()) evaluate(run);
  else if (c_sweep->parsed()) sweep(run);
  else if (c_synth->parsed()) synth(run);
  else if (c_review->parsed()) review(run);

  if (!run.out.empty()) write_manifest(run);
  if (!run.converged) {
    std::cerr << "warning: convergence: message passing stopped at the sweep budget\n";
    return kExitConvergence;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return dispatch(args);
  } catch (const folk::Error& e) {
    std::string msg = e.what();
    single_line(msg);
    std::cerr << "error: " << kind_name(e.kind()) << ": " << msg << "\n";
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::string msg = e.what();
    single_line(msg);
    std::cerr << "error: input: " << msg << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::string msg = e.what();
    single_line(msg);
    std::cerr << "error: invariant: " << msg << "\n";
    return kExitInvariant;
  }
}
