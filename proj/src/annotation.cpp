#include "folk/annotation.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "folk/error.hpp"
#include "folk/stem.hpp"

namespace folk {

using nlohmann::json;

TagBag::TagBag(std::map<std::string, std::int64_t> counts) {
  for (auto& [tag, c] : counts) add(tag, c);
}

void TagBag::add(const std::string& tag, std::int64_t count) {
  if (count < 1) input_error("tag '" + tag + "' has count " + std::to_string(count) + " (must be >= 1)");
  counts_[tag] += count;
  total_ += count;
}

void TagBag::merge(const TagBag& other) {
  for (const auto& [tag, c] : other.counts_) {
    counts_[tag] += c;
    total_ += c;
  }
}

std::int64_t TagBag::count(const std::string& tag) const {
  auto it = counts_.find(tag);
  return it == counts_.end() ? 0 : it->second;
}

std::vector<std::pair<std::string, double>> TagBag::distribution() const {
  std::vector<std::pair<std::string, double>> out;
  out.reserve(counts_.size());
  for (const auto& [tag, c] : counts_)
    out.emplace_back(tag, static_cast<double>(c) / static_cast<double>(total_));
  return out;
}

const char* to_string(UserLabel label) {
  switch (label) {
    case UserLabel::expert: return "expert";
    case UserLabel::novice: return "novice";
    default: return "unlabeled";
  }
}

UserLabel parse_label(const std::string& text) {
  if (text == "expert") return UserLabel::expert;
  if (text == "novice") return UserLabel::novice;
  input_error("unknown label '" + text + "' (expected expert or novice)");
}

const UserProfile* Corpus::find_user(const std::string& user_id) const {
  auto idx = user_index(user_id);
  return idx ? &users[*idx] : nullptr;
}

std::optional<std::size_t> Corpus::user_index(const std::string& user_id) const {
  auto it = user_index_.find(user_id);
  if (it == user_index_.end()) return std::nullopt;
  return it->second;
}

void Corpus::rebuild_index() {
  user_index_.clear();
  for (std::size_t i = 0; i < users.size(); ++i) user_index_[users[i].user_id] = i;
}

TreeifyResult treeify(const RawSapling& raw) {
  std::map<int, const RawSapling::RawNode*> by_id;
  for (const auto& n : raw.nodes) by_id[n.id] = &n;
  if (!by_id.count(raw.root))
    input_error("sapling '" + raw.sapling_id + "': root id " + std::to_string(raw.root) + " is not declared");

  TreeifyResult result;
  std::set<int> visited{raw.root};
  std::deque<int> queue{raw.root};
  result.order.emplace_back(raw.root, std::nullopt);
  while (!queue.empty()) {
    int current = queue.front();
    queue.pop_front();
    for (int child : by_id.at(current)->children) {
      if (!by_id.count(child))
        input_error("sapling '" + raw.sapling_id + "': node " + std::to_string(current) +
                    " references undeclared child id " + std::to_string(child));
      if (!visited.insert(child).second) {
        ++result.dropped_edges;
        continue;
      }
      result.order.emplace_back(child, current);
      queue.push_back(child);
    }
  }
  result.unreachable = by_id.size() - visited.size();
  return result;
}

std::size_t add_sapling(Corpus& corpus, const RawSapling& raw) {
  for (const auto& [id, dup] : [&] {
         std::map<int, int> seen;
         for (const auto& n : raw.nodes) ++seen[n.id];
         return seen;
       }()) {
    if (dup > 1)
      input_error("sapling '" + raw.sapling_id + "': node id " + std::to_string(id) + " declared twice");
  }
  TreeifyResult tree = treeify(raw);
  std::map<int, const RawSapling::RawNode*> by_id;
  for (const auto& n : raw.nodes) by_id[n.id] = &n;

  std::size_t sapling_index = corpus.saplings.size();
  Sapling sapling;
  sapling.sapling_id = raw.sapling_id;
  sapling.owner = raw.owner;

  std::map<int, NodeId> local_to_global;
  for (const auto& [local, parent] : tree.order) {
    const auto& rn = *by_id.at(local);
    SaplingNode node;
    node.id = static_cast<NodeId>(corpus.nodes.size());
    node.local_id = local;
    node.raw_name = rn.name;
    node.name = stem(rn.name);
    if (node.name.empty())
      input_error("sapling '" + raw.sapling_id + "': node " + std::to_string(local) + " has an empty name after normalization");
    for (const auto& [tag, count] : rn.tags) {
      std::string t = stem(tag);
      if (t.empty()) continue;
      node.own_tags.add(t, count);
    }
    node.tags = node.own_tags;
    node.owner = raw.owner;
    node.sapling = sapling_index;
    if (parent) {
      NodeId p = local_to_global.at(*parent);
      node.parent = p;
      node.depth_level = corpus.nodes[static_cast<std::size_t>(p)].depth_level + 1;
      corpus.nodes[static_cast<std::size_t>(p)].children.push_back(node.id);
    } else {
      sapling.root = node.id;
    }
    local_to_global[local] = node.id;
    sapling.nodes.push_back(node.id);
    corpus.nodes.push_back(std::move(node));
  }
  corpus.saplings.push_back(std::move(sapling));
  return sapling_index;
}

void propagate_tags(Corpus& corpus, std::size_t sapling_index) {
  const Sapling& s = corpus.saplings.at(sapling_index);
  for (NodeId id : s.nodes) {
    SaplingNode& n = corpus.nodes[static_cast<std::size_t>(id)];
    n.tags = n.own_tags;
  }
  // Reverse breadth-first order finishes every child before its parent.
  for (auto it = s.nodes.rbegin(); it != s.nodes.rend(); ++it) {
    const SaplingNode& n = corpus.nodes[static_cast<std::size_t>(*it)];
    if (n.parent != kNoNode) corpus.nodes[static_cast<std::size_t>(n.parent)].tags.merge(n.tags);
  }
}

void propagate_all_tags(Corpus& corpus) {
  for (std::size_t i = 0; i < corpus.saplings.size(); ++i) propagate_tags(corpus, i);
}

namespace {

std::string locator(std::size_t record, std::size_t line) {
  return "record " + std::to_string(record) + " (line " + std::to_string(line) + ")";
}

void parse_user(Corpus& corpus, const json& obj, const std::string& where, std::set<std::string>& sapling_ids) {
  if (!obj.is_object()) input_error(where + ": expected a JSON object");
  if (!obj.contains("user_id") || !obj["user_id"].is_string()) input_error(where + ": missing string field 'user_id'");
  if (!obj.contains("saplings") || !obj["saplings"].is_array()) input_error(where + ": missing array field 'saplings'");
  UserProfile user;
  user.user_id = obj["user_id"].get<std::string>();
  if (corpus.find_user(user.user_id)) input_error(where + ": duplicate user_id '" + user.user_id + "'");
  std::size_t si = 0;
  for (const auto& sj : obj["saplings"]) {
    std::string swhere = where + ".saplings[" + std::to_string(si++) + "]";
    if (!sj.is_object() || !sj.contains("sapling_id") || !sj.contains("nodes") || !sj.contains("root"))
      input_error(swhere + ": sapling needs 'sapling_id', 'nodes' and 'root'");
    RawSapling raw;
    try {
      raw.sapling_id = sj["sapling_id"].is_string() ? sj["sapling_id"].get<std::string>()
                                                    : sj["sapling_id"].dump();
      raw.owner = user.user_id;
      raw.root = sj["root"].get<int>();
      for (const auto& nj : sj["nodes"]) {
        RawSapling::RawNode rn;
        rn.id = nj.at("id").get<int>();
        rn.name = nj.at("name").get<std::string>();
        if (nj.contains("tags"))
          for (const auto& [tag, c] : nj["tags"].items()) rn.tags[tag] += c.get<std::int64_t>();
        if (nj.contains("children")) rn.children = nj["children"].get<std::vector<int>>();
        raw.nodes.push_back(std::move(rn));
      }
    } catch (const json::exception& e) {
      input_error(swhere + ": " + e.what());
    }
    if (!sapling_ids.insert(raw.sapling_id).second)
      input_error(swhere + ": duplicate sapling_id '" + raw.sapling_id + "'");
    try {
      user.saplings.push_back(add_sapling(corpus, raw));
    } catch (const Error& e) {
      input_error(swhere + ": " + e.what());
    }
  }
  corpus.users.push_back(std::move(user));
  corpus.rebuild_index();
}

}  // namespace

Corpus parse_corpus(const std::string& text) {
  Corpus corpus;
  std::set<std::string> sapling_ids;
  auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return corpus;
  if (text[first] == '[') {
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::exception& e) {
      input_error(std::string("corpus: ") + e.what());
    }
    for (std::size_t i = 0; i < doc.size(); ++i) parse_user(corpus, doc[i], "record " + std::to_string(i), sapling_ids);
    return corpus;
  }
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0, record = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      input_error(locator(record, line_no) + ": " + e.what());
    }
    parse_user(corpus, obj, locator(record, line_no), sapling_ids);
    ++record;
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) { return parse_corpus(read_file(path)); }

Corpus ingest_saplings(const std::filesystem::path& path) {
  Corpus c = load_corpus(path);
  propagate_all_tags(c);
  return c;
}

std::string corpus_json(const std::vector<RawSapling>& saplings) {
  // Group by owner, preserving first-appearance order.
  std::vector<std::string> owners;
  std::map<std::string, std::vector<const RawSapling*>> by_owner;
  for (const auto& s : saplings) {
    if (!by_owner.count(s.owner)) owners.push_back(s.owner);
    by_owner[s.owner].push_back(&s);
  }
  std::string out;
  for (const auto& owner : owners) {
    json user;
    user["user_id"] = owner;
    user["saplings"] = json::array();
    for (const RawSapling* s : by_owner[owner]) {
      json sj;
      sj["sapling_id"] = s->sapling_id;
      sj["root"] = s->root;
      sj["nodes"] = json::array();
      for (const auto& n : s->nodes) {
        json nj;
        nj["id"] = n.id;
        nj["name"] = n.name;
        nj["tags"] = json::object();
        for (const auto& [t, c] : n.tags) nj["tags"][t] = c;
        nj["children"] = n.children;
        sj["nodes"].push_back(std::move(nj));
      }
      user["saplings"].push_back(std::move(sj));
    }
    out += user.dump();
    out += '\n';
  }
  return out;
}

ReferenceTaxonomy ReferenceTaxonomy::from_edges(const std::vector<std::pair<std::string, std::string>>& edges) {
  std::vector<std::pair<std::string, std::string>> stemmed;
  for (const auto& [p, c] : edges) {
    std::string ps = stem(p), cs = stem(c);
    if (ps.empty() || cs.empty()) input_error("reference edge with empty name: '" + p + "' -> '" + c + "'");
    stemmed.emplace_back(std::move(ps), std::move(cs));
  }
  return from_stemmed_edges(stemmed, false);
}

ReferenceTaxonomy ReferenceTaxonomy::from_stemmed_edges(const std::vector<std::pair<std::string, std::string>>& edges,
                                                        bool allow_cycles, const std::vector<std::string>& names) {
  ReferenceTaxonomy ref;
  for (const auto& n : names) {
    if (n.empty()) input_error("reference term with empty name");
    ref.names_.insert(n);
  }
  for (const auto& [ps, cs] : edges) {
    if (ps.empty() || cs.empty()) input_error("reference edge with empty name");
    if (ps == cs) input_error("reference edge is a self loop: '" + ps + "'");
    if (!ref.edges_.emplace(ps, cs).second) continue;
    ref.names_.insert(ps);
    ref.names_.insert(cs);
    ref.children_[ps].push_back(cs);
    ref.parents_[cs].push_back(ps);
  }
  if (allow_cycles) return ref;
  // Cycle check by Kahn's algorithm.
  std::map<std::string, int> indeg;
  for (const auto& n : ref.names_) indeg[n] = 0;
  for (const auto& [p, c] : ref.edges_) ++indeg[c];
  std::deque<std::string> q;
  for (const auto& [n, d] : indeg)
    if (d == 0) q.push_back(n);
  std::size_t seen = 0;
  while (!q.empty()) {
    std::string n = q.front();
    q.pop_front();
    ++seen;
    auto it = ref.children_.find(n);
    if (it == ref.children_.end()) continue;
    for (const auto& c : it->second)
      if (--indeg[c] == 0) q.push_back(c);
  }
  if (seen != ref.names_.size()) input_error("reference taxonomy contains a cycle");
  return ref;
}

ReferenceTaxonomy ReferenceTaxonomy::parse(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> edges;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) input_error("reference line " + std::to_string(line_no) + ": expected parent<TAB>child");
    edges.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return from_edges(edges);
}

ReferenceTaxonomy ReferenceTaxonomy::load(const std::filesystem::path& path) { return parse(read_file(path)); }

std::set<std::string> ReferenceTaxonomy::roots() const {
  std::set<std::string> out;
  for (const auto& n : names_)
    if (!parents_.count(n)) out.insert(n);
  return out;
}

namespace {
std::set<std::string> reach(const std::map<std::string, std::vector<std::string>>& adj, const std::string& start) {
  std::set<std::string> out;
  std::vector<std::string> stack{start};
  while (!stack.empty()) {
    std::string n = stack.back();
    stack.pop_back();
    auto it = adj.find(n);
    if (it == adj.end()) continue;
    for (const auto& m : it->second)
      if (out.insert(m).second) stack.push_back(m);
  }
  return out;
}
}  // namespace

std::set<std::string> ReferenceTaxonomy::ancestors(const std::string& name) const { return reach(parents_, name); }
std::set<std::string> ReferenceTaxonomy::descendants(const std::string& name) const { return reach(children_, name); }

std::string ReferenceTaxonomy::to_tsv() const {
  std::string out;
  for (const auto& [p, c] : edges_) out += p + '\t' + c + '\n';
  return out;
}

std::vector<std::pair<std::string, UserLabel>> parse_labels(const std::string& text) {
  std::vector<std::pair<std::string, UserLabel>> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos) input_error("labels line " + std::to_string(line_no) + ": expected user_id,label");
    std::string user = line.substr(0, comma);
    std::string label = line.substr(comma + 1);
    if (line_no == 1 && user == "user_id") continue;
    try {
      out.emplace_back(user, parse_label(label));
    } catch (const Error& e) {
      input_error("labels line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<std::pair<std::string, UserLabel>> load_labels(const std::filesystem::path& path) {
  return parse_labels(read_file(path));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) input_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) input_error("cannot write '" + path.string() + "'");
  out << content;
}

}  // namespace folk
