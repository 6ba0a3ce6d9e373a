#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace folk {

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

/// Multiset of stemmed tags with occurrence counts. Ordered so that
/// iteration, and therefore every derived feature, is deterministic.
class TagBag {
 public:
  TagBag() = default;
  explicit TagBag(std::map<std::string, std::int64_t> counts);

  void add(const std::string& tag, std::int64_t count = 1);
  void merge(const TagBag& other);

  std::int64_t count(const std::string& tag) const;
  std::int64_t total() const { return total_; }
  std::size_t distinct() const { return counts_.size(); }
  bool empty() const { return counts_.empty(); }
  const std::map<std::string, std::int64_t>& entries() const { return counts_; }

  /// Tag probabilities, same key order as entries().
  std::vector<std::pair<std::string, double>> distribution() const;

  bool operator==(const TagBag& other) const = default;

 private:
  std::map<std::string, std::int64_t> counts_;
  std::int64_t total_ = 0;
};

struct SaplingNode {
  NodeId id = kNoNode;
  int local_id = 0;      // id within the input sapling
  std::string name;      // normalized
  std::string raw_name;
  TagBag own_tags;  // as ingested
  TagBag tags;      // own_tags plus all descendants' after propagation
  int depth_level = 1;   // root = 1
  NodeId parent = kNoNode;
  std::vector<NodeId> children;
  std::string owner;
  std::size_t sapling = 0;  // index into Corpus::saplings
  bool is_expert_node = false;
};

struct Sapling {
  std::string sapling_id;
  std::string owner;
  NodeId root = kNoNode;
  std::vector<NodeId> nodes;  // breadth-first from root
};

enum class UserLabel { unlabeled, expert, novice };

const char* to_string(UserLabel label);
UserLabel parse_label(const std::string& text);

struct UserProfile {
  std::string user_id;
  std::vector<std::size_t> saplings;
  UserLabel label = UserLabel::unlabeled;
};

/// Immutable after ingestion. Node ids are indices into `nodes`, saplings are
/// stored contiguously so ids of one sapling grow with breadth-first order.
class Corpus {
 public:
  std::vector<SaplingNode> nodes;
  std::vector<Sapling> saplings;
  std::vector<UserProfile> users;

  const SaplingNode& node(NodeId id) const { return nodes.at(static_cast<std::size_t>(id)); }
  const Sapling& sapling(std::size_t index) const { return saplings.at(index); }
  const UserProfile* find_user(const std::string& user_id) const;
  std::optional<std::size_t> user_index(const std::string& user_id) const;

  void rebuild_index();

 private:
  std::unordered_map<std::string, std::size_t> user_index_;
};

/// Raw, untrusted graph prior to tree conversion. Node identifiers are local.
struct RawSapling {
  std::string sapling_id;
  std::string owner;
  int root = 0;
  struct RawNode {
    int id = 0;
    std::string name;
    std::map<std::string, std::int64_t> tags;
    std::vector<int> children;
  };
  std::vector<RawNode> nodes;
};

struct TreeifyResult {
  /// Local node ids in breadth-first order, paired with the parent's local
  /// id (root has none).
  std::vector<std::pair<int, std::optional<int>>> order;
  std::size_t dropped_edges = 0;
  std::size_t unreachable = 0;
};

/// Breadth-first from the root; each node keeps the first parent that reaches
/// it. Edges to visited nodes and unreachable nodes are dropped and counted.
TreeifyResult treeify(const RawSapling& raw);

/// Appends a raw sapling to the corpus: tree conversion, name/tag
/// normalization, depth levels. Tags are stored raw (not yet propagated).
std::size_t add_sapling(Corpus& corpus, const RawSapling& raw);

/// Bottom-up multiset union: every internal node gains all descendants' tags.
void propagate_tags(Corpus& corpus, std::size_t sapling_index);
void propagate_all_tags(Corpus& corpus);

/// Parses the JSON corpus format. Records are located as "record N (line L).saplings[s]"
/// in error messages. The result is normalized but not tag-propagated.
Corpus parse_corpus(const std::string& text);
Corpus load_corpus(const std::filesystem::path& path);

/// Ingestion as used by the pipeline: load then propagate tags.
Corpus ingest_saplings(const std::filesystem::path& path);

/// Serializes raw saplings (the generator's output) into corpus JSON.
std::string corpus_json(const std::vector<RawSapling>& saplings);

/// Parent -> child edges between stemmed names.
class ReferenceTaxonomy {
 public:
  ReferenceTaxonomy() = default;

  /// Throws on cycles. Names are normalized with stem().
  static ReferenceTaxonomy from_edges(const std::vector<std::pair<std::string, std::string>>& edges);
  /// Names taken as given. With allow_cycles, a name may reach itself; its
  /// ancestor and descendant sets then include it. `names` adds terms that
  /// take part in no edge.
  static ReferenceTaxonomy from_stemmed_edges(const std::vector<std::pair<std::string, std::string>>& edges,
                                              bool allow_cycles, const std::vector<std::string>& names = {});
  static ReferenceTaxonomy parse(const std::string& text);
  static ReferenceTaxonomy load(const std::filesystem::path& path);

  const std::set<std::pair<std::string, std::string>>& edges() const { return edges_; }
  const std::set<std::string>& names() const { return names_; }
  std::set<std::string> roots() const;
  bool contains(const std::string& name) const { return names_.count(name) > 0; }

  std::set<std::string> ancestors(const std::string& name) const;
  std::set<std::string> descendants(const std::string& name) const;

  std::string to_tsv() const;

 private:
  std::set<std::pair<std::string, std::string>> edges_;
  std::set<std::string> names_;
  std::map<std::string, std::vector<std::string>> children_;
  std::map<std::string, std::vector<std::string>> parents_;
};

/// CSV "user_id,label" with an optional header row.
std::vector<std::pair<std::string, UserLabel>> parse_labels(const std::string& text);
std::vector<std::pair<std::string, UserLabel>> load_labels(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace folk
