#include "folk/synthetic.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include <json.hpp>

#include "folk/error.hpp"
#include "folk/stem.hpp"

namespace folk {

namespace {

using Rng = std::mt19937_64;

const char* const kWords[] = {
    "animal", "bird", "cat", "dog", "eagle", "falcon", "goose", "horse", "iguana", "jaguar", "koala",
    "lemur", "monkey", "newt", "otter", "parrot", "quail", "rabbit", "salmon", "tiger", "urchin",
    "viper", "walrus", "yak", "zebra", "badger", "camel", "donkey", "ferret", "gecko", "heron",
    "ibis", "jackal", "kestrel", "llama", "marmot", "narwhal", "ocelot", "panda", "raccoon", "shark",
    "toucan", "vulture", "weasel", "bison", "cobra", "dingo", "finch", "gibbon", "hyena", "lynx",
    "moose", "orca", "puffin", "robin", "squid", "tapir", "wombat", "beaver", "condor", "dolphin",
    "emu", "gorilla", "hamster", "kiwi", "lobster", "mole", "owl", "pelican", "seal", "trout"};
const char* const kVague[] = {"misc", "stuff", "other", "random", "things"};
const char* const kOnset[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"};
const char* const kVowel[] = {"a", "e", "i", "o", "u"};

double uniform(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

template <class T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(v.size()) - 1))];
}

struct Truth {
  std::vector<std::string> name;
  std::vector<int> parent;
  std::vector<std::vector<int>> children;
  std::vector<int> level;   // root = 1
  std::vector<int> height;  // levels below and including the node
  int root = 0;

  int size() const { return static_cast<int>(name.size()); }

  void finish() {
    const int n = size();
    children.assign(static_cast<std::size_t>(n), {});
    level.assign(static_cast<std::size_t>(n), 1);
    height.assign(static_cast<std::size_t>(n), 1);
    for (int v = 0; v < n; ++v)
      if (parent[static_cast<std::size_t>(v)] >= 0) children[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])].push_back(v);
    std::vector<int> order{root};
    for (std::size_t k = 0; k < order.size(); ++k)
      for (int c : children[static_cast<std::size_t>(order[k])]) {
        level[static_cast<std::size_t>(c)] = level[static_cast<std::size_t>(order[k])] + 1;
        order.push_back(c);
      }
    for (auto it = order.rbegin(); it != order.rend(); ++it)
      for (int c : children[static_cast<std::size_t>(*it)])
        height[static_cast<std::size_t>(*it)] = std::max(height[static_cast<std::size_t>(*it)], height[static_cast<std::size_t>(c)] + 1);
  }

  bool descends(int v, int anc) const {
    for (int x = v; x >= 0; x = parent[static_cast<std::size_t>(x)])
      if (x == anc) return true;
    return false;
  }
};

Truth random_truth(const SyntheticSpec& spec, Rng& rng) {
  if (spec.truth_nodes < spec.truth_depth) input_error("synthetic: truth_nodes must be at least truth_depth");
  std::vector<std::string> pool;
  std::set<std::string> stems;
  for (const char* w : kWords)
    if (stems.insert(stem(w)).second) pool.push_back(stem(w));
  if (static_cast<int>(pool.size()) < spec.truth_nodes)
    input_error("synthetic: at most " + std::to_string(pool.size()) + " truth nodes are supported");
  std::shuffle(pool.begin(), pool.end(), rng);

  Truth t;
  t.name.assign(pool.begin(), pool.begin() + spec.truth_nodes);
  t.parent.assign(static_cast<std::size_t>(spec.truth_nodes), -1);
  // A spine fixes the depth; the rest attach at random above the last level.
  std::vector<int> level(static_cast<std::size_t>(spec.truth_nodes), 1);
  for (int v = 1; v < spec.truth_depth; ++v) {
    t.parent[static_cast<std::size_t>(v)] = v - 1;
    level[static_cast<std::size_t>(v)] = v + 1;
  }
  std::vector<int> fanout(static_cast<std::size_t>(spec.truth_nodes), 0);
  for (int v = 1; v < spec.truth_depth; ++v) ++fanout[static_cast<std::size_t>(v - 1)];
  for (int v = spec.truth_depth; v < spec.truth_nodes; ++v) {
    std::vector<int> open;
    for (int u = 0; u < v; ++u)
      if (level[static_cast<std::size_t>(u)] < spec.truth_depth && fanout[static_cast<std::size_t>(u)] < 4) open.push_back(u);
    if (open.empty())
      for (int u = 0; u < v; ++u)
        if (level[static_cast<std::size_t>(u)] < spec.truth_depth) open.push_back(u);
    int p = pick(rng, open);
    t.parent[static_cast<std::size_t>(v)] = p;
    level[static_cast<std::size_t>(v)] = level[static_cast<std::size_t>(p)] + 1;
    ++fanout[static_cast<std::size_t>(p)];
  }
  t.finish();
  return t;
}

Truth truth_from_reference(const ReferenceTaxonomy& ref) {
  auto roots = ref.roots();
  if (roots.size() != 1) input_error("synthetic: ground truth must have exactly one root");
  Truth t;
  std::map<std::string, int> index;
  for (const auto& n : ref.names()) {
    index[n] = t.size();
    t.name.push_back(n);
    t.parent.push_back(-1);
  }
  for (const auto& [p, c] : ref.edges()) {
    int& slot = t.parent[static_cast<std::size_t>(index[c])];
    if (slot >= 0) input_error("synthetic: ground truth node '" + c + "' has two parents");
    slot = index[p];
  }
  t.root = index[*roots.begin()];
  t.finish();
  return t;
}

std::vector<std::vector<std::string>> concept_vocabularies(int concepts, int size, Rng& rng) {
  std::set<std::string> used;
  std::vector<std::vector<std::string>> out(static_cast<std::size_t>(concepts));
  for (auto& vocab : out)
    while (static_cast<int>(vocab.size()) < size) {
      std::string w;
      int syllables = uniform_int(rng, 2, 3);
      for (int k = 0; k < syllables; ++k) {
        w += kOnset[uniform_int(rng, 0, static_cast<int>(std::size(kOnset)) - 1)];
        w += kVowel[uniform_int(rng, 0, static_cast<int>(std::size(kVowel)) - 1)];
      }
      w += kOnset[uniform_int(rng, 0, static_cast<int>(std::size(kOnset)) - 1)];
      std::string key = stem(w);
      if (used.insert(key).second) vocab.push_back(key);
    }
  return out;
}

class SaplingWriter {
 public:
  SaplingWriter(const Truth& truth, const std::vector<std::vector<std::string>>& vocab, const SyntheticSpec& spec, Rng& rng)
      : truth_(truth), vocab_(vocab), spec_(spec), rng_(rng) {}

  /// Starts a sapling; returns the root's local id.
  int begin(const std::string& owner, const std::string& id, int topic, const std::string& name, double core_rate) {
    raw_ = RawSapling{};
    core_rate_ = core_rate;
    raw_.sapling_id = id;
    raw_.owner = owner;
    raw_.root = add(topic, name);
    return raw_.root;
  }

  int add(int topic, const std::string& name) {
    RawSapling::RawNode node;
    node.id = static_cast<int>(raw_.nodes.size());
    node.name = name;
    node.tags = tags_for(topic);
    raw_.nodes.push_back(std::move(node));
    return raw_.nodes.back().id;
  }

  int add_child(int parent, int topic) {
    int c = add(topic, truth_.name[static_cast<std::size_t>(topic)]);
    raw_.nodes[static_cast<std::size_t>(parent)].children.push_back(c);
    return c;
  }

  RawSapling take() { return std::move(raw_); }

 private:
  std::map<std::string, std::int64_t> tags_for(int topic) {
    std::map<std::string, std::int64_t> tags;
    const auto& v = vocab_[static_cast<std::size_t>(topic)];
    const auto core = static_cast<std::size_t>(std::min(spec_.core_tags, spec_.vocabulary));
    for (std::size_t i = 0; i < core; ++i)
      if (uniform(rng_) < core_rate_) tags[v[i]] += uniform_int(rng_, 1, 3);
    if (core < v.size()) {
      int k = uniform_int(rng_, spec_.tags_min, spec_.tags_max);
      for (int i = 0; i < k; ++i)
        tags[v[core + static_cast<std::size_t>(uniform_int(rng_, 0, static_cast<int>(v.size() - core) - 1))]] += 1;
    }
    if (uniform(rng_) < spec_.name_tag_rate) tags[truth_.name[static_cast<std::size_t>(topic)]] += 1;
    if (uniform(rng_) < spec_.noise) tags[pick(rng_, vocab_[static_cast<std::size_t>(uniform_int(rng_, 0, truth_.size() - 1))])] += 1;
    return tags;
  }

  const Truth& truth_;
  const std::vector<std::vector<std::string>>& vocab_;
  const SyntheticSpec& spec_;
  Rng& rng_;
  RawSapling raw_;
  double core_rate_ = 0;
};

int pick_root(const Truth& t, Rng& rng, double seed_rate, int min_height) {
  if (t.height[static_cast<std::size_t>(t.root)] >= min_height && uniform(rng) < seed_rate) return t.root;
  std::vector<int> ok;
  for (int v = 0; v < t.size(); ++v)
    if (t.height[static_cast<std::size_t>(v)] >= min_height) ok.push_back(v);
  return pick(rng, ok);
}

void expert_sapling(const Truth& t, SaplingWriter& w, const SyntheticSpec& spec, Rng& rng, const std::string& owner,
                    const std::string& id) {
  int root = pick_root(t, rng, spec.expert_root_rate, spec.expert_depth_min);
  int depth = std::min(uniform_int(rng, spec.expert_depth_min, spec.expert_depth_max), t.height[static_cast<std::size_t>(root)]);
  int local = w.begin(owner, id, root, t.name[static_cast<std::size_t>(root)], spec.core_rate);
  // Faithful subtree: children are sampled, but one child that can still
  // reach the target depth is always kept.
  std::vector<std::tuple<int, int, int>> stack{{root, local, 1}};
  while (!stack.empty()) {
    auto [v, at, d] = stack.back();
    stack.pop_back();
    if (d >= depth) continue;
    const auto& ch = t.children[static_cast<std::size_t>(v)];
    std::vector<int> deep;
    for (int c : ch)
      if (t.height[static_cast<std::size_t>(c)] >= depth - d) deep.push_back(c);
    int forced = deep.empty() ? -1 : pick(rng, deep);
    for (int c : ch)
      if (c == forced || uniform(rng) < spec.expert_keep) stack.emplace_back(c, w.add_child(at, c), d + 1);
  }
}

void novice_sapling(const Truth& t, SaplingWriter& w, const SyntheticSpec& spec, Rng& rng, const std::string& owner,
                    const std::string& id) {
  int root = pick_root(t, rng, spec.novice_root_rate, 2);
  std::string root_name = t.name[static_cast<std::size_t>(root)];
  if (uniform(rng) < spec.vagueness) root_name = kVague[uniform_int(rng, 0, static_cast<int>(std::size(kVague)) - 1)];
  int local = w.begin(owner, id, root, root_name, spec.novice_core_rate);

  // Broad rather than deep: descendants of the root are flattened into at
  // most novice_depth levels, skipping intermediate levels at random.
  std::vector<std::pair<int, int>> frontier{{root, local}};
  std::set<int> used{root};
  for (int d = 1; d < spec.novice_depth; ++d) {
    std::vector<std::pair<int, int>> next;
    for (auto [v, at] : frontier) {
      const auto& ch = t.children[static_cast<std::size_t>(v)];
      if (ch.empty()) continue;
      int want = uniform_int(rng, 1, static_cast<int>(ch.size()) + 1);
      std::vector<int> pool = ch;
      std::shuffle(pool.begin(), pool.end(), rng);
      for (int c : pool) {
        if (want-- <= 0) break;
        int topic = c;
        const auto& gc = t.children[static_cast<std::size_t>(c)];
        if (!gc.empty() && uniform(rng) < spec.vagueness) topic = pick(rng, gc);
        if (uniform(rng) < spec.noise) {
          std::vector<int> stray;
          for (int x = 0; x < t.size(); ++x)
            if (!t.descends(x, v)) stray.push_back(x);
          if (!stray.empty()) topic = pick(rng, stray);
        }
        if (!used.insert(topic).second) continue;
        next.emplace_back(topic, w.add_child(at, topic));
      }
    }
    frontier = std::move(next);
  }
}

}  // namespace

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
  if (spec.num_experts < 0 || spec.num_novices < 0) input_error("synthetic: user counts must be non-negative");
  if (spec.expert_depth_min < 3 || spec.expert_depth_max < spec.expert_depth_min)
    input_error("synthetic: expert depth range must satisfy 3 <= min <= max");
  if (spec.novice_depth < 1 || spec.novice_depth > 2) input_error("synthetic: novice depth must be 1 or 2");
  if (spec.expert_saplings_min < 1 || spec.expert_saplings_max < spec.expert_saplings_min ||
      spec.novice_saplings_min < 1 || spec.novice_saplings_max < spec.novice_saplings_min)
    input_error("synthetic: sapling count ranges must satisfy 1 <= min <= max");
  if (spec.vocabulary < 1 || spec.core_tags < 0 || spec.tags_min < 0 || spec.tags_max < spec.tags_min)
    input_error("synthetic: tag parameters must be positive");
  for (double p : {spec.vagueness, spec.noise, spec.expert_root_rate, spec.novice_root_rate, spec.name_tag_rate, spec.expert_keep, spec.core_rate, spec.novice_core_rate})
    if (!(p >= 0.0 && p <= 1.0)) input_error("synthetic: rates must lie in [0, 1]");

  Rng rng(spec.seed);
  Truth t = spec.ground_truth ? truth_from_reference(*spec.ground_truth) : random_truth(spec, rng);
  if (spec.expert_depth_max > t.height[static_cast<std::size_t>(t.root)])
    input_error("synthetic: expert depth " + std::to_string(spec.expert_depth_max) + " exceeds ground-truth depth " +
                std::to_string(t.height[static_cast<std::size_t>(t.root)]));
  auto vocab = concept_vocabularies(t.size(), spec.vocabulary, rng);

  SyntheticCorpus out;
  std::vector<std::pair<std::string, std::string>> edges;
  for (int v = 0; v < t.size(); ++v)
    if (t.parent[static_cast<std::size_t>(v)] >= 0)
      edges.emplace_back(t.name[static_cast<std::size_t>(t.parent[static_cast<std::size_t>(v)])], t.name[static_cast<std::size_t>(v)]);
  out.truth = ReferenceTaxonomy::from_edges(edges);
  out.seed_term = t.name[static_cast<std::size_t>(t.root)];

  // User ids are shuffled so that they carry no label information.
  std::vector<bool> expert(static_cast<std::size_t>(spec.num_experts + spec.num_novices), false);
  std::fill(expert.begin(), expert.begin() + spec.num_experts, true);
  std::shuffle(expert.begin(), expert.end(), rng);

  SaplingWriter writer(t, vocab, spec, rng);
  int sapling_id = 0;
  for (std::size_t u = 0; u < expert.size(); ++u) {
    char owner[16];
    std::snprintf(owner, sizeof owner, "u%03zu", u + 1);
    out.labels.emplace_back(owner, expert[u] ? UserLabel::expert : UserLabel::novice);
    int count = expert[u] ? uniform_int(rng, spec.expert_saplings_min, spec.expert_saplings_max)
                          : uniform_int(rng, spec.novice_saplings_min, spec.novice_saplings_max);
    for (int k = 0; k < count; ++k) {
      std::string id = "s" + std::to_string(++sapling_id);
      if (expert[u])
        expert_sapling(t, writer, spec, rng, owner, id);
      else
        novice_sapling(t, writer, spec, rng, owner, id);
      out.saplings.push_back(writer.take());
    }
  }
  return out;
}

std::string SyntheticCorpus::labels_csv() const {
  std::string out = "user_id,label\n";
  for (const auto& [u, l] : labels) out += u + "," + to_string(l) + "\n";
  return out;
}

Corpus ingest_synthetic(const SyntheticCorpus& synthetic) {
  Corpus c = parse_corpus(corpus_json(synthetic.saplings));
  propagate_all_tags(c);
  return c;
}

std::string SyntheticSpec::to_json() const {
  nlohmann::ordered_json j;
  if (ground_truth) j["ground_truth"] = ground_truth->to_tsv();
  j["truth_nodes"] = truth_nodes;
  j["truth_depth"] = truth_depth;
  j["num_experts"] = num_experts;
  j["num_novices"] = num_novices;
  j["expert_depth_min"] = expert_depth_min;
  j["expert_depth_max"] = expert_depth_max;
  j["novice_depth"] = novice_depth;
  j["expert_saplings_min"] = expert_saplings_min;
  j["expert_saplings_max"] = expert_saplings_max;
  j["novice_saplings_min"] = novice_saplings_min;
  j["novice_saplings_max"] = novice_saplings_max;
  j["vagueness"] = vagueness;
  j["noise"] = noise;
  j["expert_root_rate"] = expert_root_rate;
  j["novice_root_rate"] = novice_root_rate;
  j["name_tag_rate"] = name_tag_rate;
  j["expert_keep"] = expert_keep;
  j["vocabulary"] = vocabulary;
  j["core_tags"] = core_tags;
  j["core_rate"] = core_rate;
  j["novice_core_rate"] = novice_core_rate;
  j["tags_min"] = tags_min;
  j["tags_max"] = tags_max;
  j["seed"] = seed;
  return j.dump(2) + "\n";
}

SyntheticSpec SyntheticSpec::from_json(const std::string& text) {
  SyntheticSpec s;
  try {
    auto j = nlohmann::json::parse(text);
    if (!j.is_object()) input_error("synthetic spec must be a JSON object");
    static const std::set<std::string> known{
        "ground_truth", "truth_nodes", "truth_depth", "num_experts", "num_novices", "expert_depth_min",
        "expert_depth_max", "novice_depth", "expert_saplings_min", "expert_saplings_max", "novice_saplings_min",
        "novice_saplings_max", "vagueness", "noise", "expert_root_rate", "novice_root_rate", "name_tag_rate", "expert_keep", "vocabulary", "core_tags", "core_rate", "novice_core_rate", "tags_min", "tags_max", "seed"};
    for (auto it = j.begin(); it != j.end(); ++it)
      if (!known.count(it.key())) input_error("synthetic spec: unknown field '" + it.key() + "'");
    if (j.contains("ground_truth")) s.ground_truth = ReferenceTaxonomy::parse(j["ground_truth"].get<std::string>());
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
    };
    get("truth_nodes", s.truth_nodes);
    get("truth_depth", s.truth_depth);
    get("num_experts", s.num_experts);
    get("num_novices", s.num_novices);
    get("expert_depth_min", s.expert_depth_min);
    get("expert_depth_max", s.expert_depth_max);
    get("novice_depth", s.novice_depth);
    get("expert_saplings_min", s.expert_saplings_min);
    get("expert_saplings_max", s.expert_saplings_max);
    get("novice_saplings_min", s.novice_saplings_min);
    get("novice_saplings_max", s.novice_saplings_max);
    get("vagueness", s.vagueness);
    get("noise", s.noise);
    get("expert_root_rate", s.expert_root_rate);
    get("novice_root_rate", s.novice_root_rate);
    get("name_tag_rate", s.name_tag_rate);
    get("expert_keep", s.expert_keep);
    get("vocabulary", s.vocabulary);
    get("core_tags", s.core_tags);
    get("core_rate", s.core_rate);
    get("novice_core_rate", s.novice_core_rate);
    get("tags_min", s.tags_min);
    get("tags_max", s.tags_max);
    get("seed", s.seed);
  } catch (const nlohmann::json::exception& e) {
    input_error(std::string("synthetic spec: ") + e.what());
  }
  return s;
}

}  // namespace folk
