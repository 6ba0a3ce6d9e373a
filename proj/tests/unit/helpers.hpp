// Small builders for hand-written corpora.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "folk/annotation.hpp"

namespace testing {

struct N {
  std::string name;
  std::map<std::string, std::int64_t> tags;
  std::vector<int> children;
};

inline folk::RawSapling raw(const std::string& owner, const std::string& id, const std::vector<N>& nodes) {
  folk::RawSapling r;
  r.owner = owner;
  r.sapling_id = id;
  r.root = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    r.nodes.push_back({static_cast<int>(i), nodes[i].name, nodes[i].tags, nodes[i].children});
  return r;
}

/// Serialized, parsed and tag-propagated, as the pipeline sees it.
inline folk::Corpus corpus(const std::vector<folk::RawSapling>& saplings) {
  auto c = folk::parse_corpus(folk::corpus_json(saplings));
  folk::propagate_all_tags(c);
  return c;
}

inline std::string test_data(const std::string& name) { return std::string(FOLK_TEST_DATA) + "/" + name; }

}  // namespace testing
