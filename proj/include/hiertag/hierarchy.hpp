/* Copyright 2026 The HierTag Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef HIERTAG_HIERARCHY_HPP_
#define HIERTAG_HIERARCHY_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hiertag {

using TagId = std::string;
// Ordered sets give the lexicographic iteration order every consumer relies on.
using TagSet = std::set<TagId>;

// Name of the pseudo-tagset whose members are exactly the fine-grained tags.
inline constexpr std::string_view kFineTagset = "FGTS";
// Synthesized fine-grained "all the rest" tag.
inline constexpr std::string_view kFineOther = "FG-Other";

// Synthesized name "<base>-Other" for nodes and tagsets.
std::string other_name(std::string_view base);

// A DAG of tags. An edge (child, parent) states that child is a hyponym of
// parent. Tagsets are named groups of nodes.
class TagHierarchy {
 public:
  TagHierarchy() = default;

  // Line format: `edge <child> <parent>`, `tagset <name> <tag>...`, `#`
  // comments. A `# extended` line marks a serialized extended hierarchy, which
  // may also carry `fgts <tag>...`. Throws Error(kParse) with the line number,
  // Error(kValidation) on cycles.
  static TagHierarchy parse(std::string_view text);
  static TagHierarchy load(const std::filesystem::path& path);

  void add_node(const TagId& tag);
  // Creates missing endpoints. Does not check for cycles; see validate().
  void add_edge(const TagId& child, const TagId& parent);
  // Creates missing members. Throws on a duplicate tagset name.
  void add_tagset(const std::string& name, const TagSet& members);
  void add_to_tagset(const std::string& name, const TagId& tag);

  // Throws Error(kValidation) naming a cycle if the graph is not acyclic.
  void validate() const;

  bool has_node(const TagId& tag) const { return nodes_.count(tag) > 0; }
  bool has_tagset(const std::string& name) const {
    return tagsets_.count(name) > 0;
  }
  const TagSet& nodes() const { return nodes_; }
  const TagSet& parents(const TagId& tag) const;
  const TagSet& children(const TagId& tag) const;
  std::vector<std::pair<TagId, TagId>> edges() const;
  std::size_t edge_count() const;
  const std::map<std::string, TagSet>& tagsets() const { return tagsets_; }
  const TagSet& tagset(const std::string& name) const;

  // Sem(d): d plus every tag with a directed path to d.
  TagSet sem(const TagId& tag) const;
  // Nodes without hyponyms.
  TagSet fgts() const;
  // fgts() ∩ sem(d).
  TagSet fine(const TagId& tag) const;

  bool extended() const { return extended_; }
  void set_extended(bool extended) { extended_ = extended; }
  // The `fgts` directive of a serialized extended hierarchy, if present.
  const TagSet& declared_fgts() const { return declared_fgts_; }

  // Canonical text: optional `# extended` + `fgts` lines, sorted edges, then
  // sorted tagsets with sorted members.
  std::string serialize() const;
  void save(const std::filesystem::path& path) const;

 private:
  void require_node(const TagId& tag) const;

  TagSet nodes_;
  std::map<TagId, TagSet> parents_;
  std::map<TagId, TagSet> children_;
  std::map<std::string, TagSet> tagsets_;
  TagSet declared_fgts_;
  bool extended_ = false;
};

// A hierarchy after the automatic Other-extension. Owns the fine-grained tag
// list and, for every tagset, the partition of the fine-grained tags among
// the tagset's members.
class ExtendedHierarchy {
 public:
  struct Stats {
    std::size_t added_nodes = 0;
    std::size_t added_edges = 0;
  };

  ExtendedHierarchy() = default;

  // Adds d-Other under every non-fine node, FG-Other, and T-Other (with edges
  // from each fine tag it covers) for every tagset, then verifies that every
  // tagset partitions the fine-grained tags.
  static ExtendedHierarchy extend(const TagHierarchy& base);
  // Rebuilds from a graph that was already extended (e.g. a parsed `#
  // extended` file).
  static ExtendedHierarchy from_extended(TagHierarchy graph);

  const TagHierarchy& graph() const { return graph_; }
  const Stats& stats() const { return stats_; }
  const std::vector<TagId>& fgts() const { return fgts_; }
  bool is_fine(const TagId& tag) const;

  // True for declared tagsets and for kFineTagset.
  bool has_tagset(const std::string& name) const;
  std::vector<TagId> tagset_members(const std::string& name) const;
  std::vector<std::string> tagset_names() const;
  TagId other_tag(const std::string& tagset) const;

  // Fine(tag) for a member of the tagset.
  const TagSet& fine(const std::string& tagset, const TagId& tag) const;
  // The unique member of the tagset whose Fine set holds the fine tag.
  const TagId& map_fine_to_tagset(const TagId& fine_tag,
                                  const std::string& tagset) const;
  // Maps any tag: itself if it is a member; otherwise the first member found
  // by breadth-first traversal of out-edges; the tagset's Other tag if none.
  TagId map_tag(const TagId& tag, const std::string& tagset) const;

  // Position i holds Fine(y_i). The gold tags must be tagset members.
  std::vector<TagSet> agree_sets(std::span<const TagId> gold,
                                 const std::string& tagset) const;

  std::string serialize() const { return graph_.serialize(); }

 private:
  void build_partitions();

  TagHierarchy graph_;
  Stats stats_;
  std::vector<TagId> fgts_;
  std::map<std::string, std::map<TagId, TagSet>> fine_map_;
  std::map<std::string, std::map<TagId, TagId>> partition_;
};

}  // namespace hiertag

#endif  // HIERTAG_HIERARCHY_HPP_
