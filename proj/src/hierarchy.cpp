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

#include "hiertag/hierarchy.hpp"

#include <deque>
#include <string>

#include "hiertag/error.hpp"
#include "text_util.hpp"

namespace hiertag {

namespace {

const TagSet& empty_set() {
  static const TagSet kEmpty;
  return kEmpty;
}

[[noreturn]] void syntax_error(std::size_t line_no, const std::string& msg) {
  throw Error(ErrorCode::kParse,
              "line " + std::to_string(line_no) + ": " + msg);
}

}  // namespace

std::string other_name(std::string_view base) {
  return std::string(base) + "-Other";
}

// ---------------------------------------------------------------------------
// TagHierarchy

TagHierarchy TagHierarchy::parse(std::string_view text) {
  TagHierarchy h;
  const auto lines = internal::split_lines(text);
  for (std::size_t idx = 0; idx < lines.size(); ++idx) {
    const std::size_t line_no = idx + 1;
    std::string_view line = internal::trim(lines[idx]);
    if (line == "# extended") {
      h.extended_ = true;
      continue;
    }
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    const auto fields = internal::split_whitespace(line);
    if (fields.empty()) continue;

    const std::string& directive = fields[0];
    if (directive == "edge") {
      if (fields.size() != 3) {
        syntax_error(line_no, "expected 'edge <child> <parent>'");
      }
      if (fields[1] == fields[2]) {
        throw Error(ErrorCode::kValidation,
                    "line " + std::to_string(line_no) +
                        ": cycle detected: " + fields[1] + " -> " + fields[1]);
      }
      h.add_edge(fields[1], fields[2]);
    } else if (directive == "tagset") {
      if (fields.size() < 3) {
        syntax_error(line_no, "expected 'tagset <name> <tag> [<tag> ...]'");
      }
      if (fields[1] == kFineTagset) {
        syntax_error(line_no, "tagset name '" + fields[1] + "' is reserved");
      }
      if (h.has_tagset(fields[1])) {
        syntax_error(line_no, "duplicate tagset '" + fields[1] + "'");
      }
      h.add_tagset(fields[1], TagSet(fields.begin() + 2, fields.end()));
    } else if (directive == "fgts") {
      if (!h.extended_) {
        syntax_error(line_no, "'fgts' is only valid in an extended hierarchy");
      }
      if (fields.size() < 2) syntax_error(line_no, "empty 'fgts' directive");
      h.declared_fgts_.insert(fields.begin() + 1, fields.end());
    } else {
      syntax_error(line_no, "unknown directive '" + directive + "'");
    }
  }
  for (const auto& tag : h.declared_fgts_) h.add_node(tag);
  h.validate();
  return h;
}

TagHierarchy TagHierarchy::load(const std::filesystem::path& path) {
  const std::string text = internal::read_file(path);
  try {
    return parse(text);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void TagHierarchy::add_node(const TagId& tag) {
  if (tag.empty()) throw Error(ErrorCode::kValidation, "empty tag name");
  nodes_.insert(tag);
}

void TagHierarchy::add_edge(const TagId& child, const TagId& parent) {
  add_node(child);
  add_node(parent);
  parents_[child].insert(parent);
  children_[parent].insert(child);
}

void TagHierarchy::add_tagset(const std::string& name, const TagSet& members) {
  if (name.empty()) throw Error(ErrorCode::kValidation, "empty tagset name");
  if (has_tagset(name)) {
    throw Error(ErrorCode::kValidation, "duplicate tagset '" + name + "'");
  }
  for (const auto& tag : members) add_node(tag);
  tagsets_[name] = members;
}

void TagHierarchy::add_to_tagset(const std::string& name, const TagId& tag) {
  auto it = tagsets_.find(name);
  if (it == tagsets_.end()) {
    throw Error(ErrorCode::kValidation, "unknown tagset '" + name + "'");
  }
  add_node(tag);
  it->second.insert(tag);
}

void TagHierarchy::validate() const {
  // Iterative three-colour DFS along parent edges.
  enum class Colour { kWhite, kGrey, kBlack };
  std::map<TagId, Colour> colour;
  for (const auto& n : nodes_) colour[n] = Colour::kWhite;

  for (const auto& root : nodes_) {
    if (colour[root] != Colour::kWhite) continue;
    struct Frame {
      const TagId* node;
      TagSet::const_iterator next;
      TagSet::const_iterator end;
    };
    std::vector<Frame> stack;
    const auto& ps = parents(root);
    stack.push_back({&root, ps.begin(), ps.end()});
    colour[root] = Colour::kGrey;
    while (!stack.empty()) {
      Frame& top = stack.back();
      if (top.next == top.end) {
        colour[*top.node] = Colour::kBlack;
        stack.pop_back();
        continue;
      }
      const TagId& p = *top.next++;
      if (colour[p] == Colour::kGrey) {
        std::string path;
        bool on_cycle = false;
        for (const auto& f : stack) {
          if (*f.node == p) on_cycle = true;
          if (on_cycle) path += *f.node + " -> ";
        }
        throw Error(ErrorCode::kValidation, "cycle detected: " + path + p);
      }
      if (colour[p] == Colour::kWhite) {
        colour[p] = Colour::kGrey;
        const auto& pp = parents(p);
        stack.push_back({&p, pp.begin(), pp.end()});
      }
    }
  }
}

const TagSet& TagHierarchy::parents(const TagId& tag) const {
  auto it = parents_.find(tag);
  return it == parents_.end() ? empty_set() : it->second;
}

const TagSet& TagHierarchy::children(const TagId& tag) const {
  auto it = children_.find(tag);
  return it == children_.end() ? empty_set() : it->second;
}

std::vector<std::pair<TagId, TagId>> TagHierarchy::edges() const {
  std::vector<std::pair<TagId, TagId>> out;
  for (const auto& [child, ps] : parents_) {
    for (const auto& p : ps) out.emplace_back(child, p);
  }
  return out;
}

std::size_t TagHierarchy::edge_count() const {
  std::size_t n = 0;
  for (const auto& [child, ps] : parents_) n += ps.size();
  return n;
}

const TagSet& TagHierarchy::tagset(const std::string& name) const {
  auto it = tagsets_.find(name);
  if (it == tagsets_.end()) {
    throw Error(ErrorCode::kValidation, "unknown tagset '" + name + "'");
  }
  return it->second;
}

void TagHierarchy::require_node(const TagId& tag) const {
  if (!has_node(tag)) {
    throw Error(ErrorCode::kValidation, "unknown tag '" + tag + "'");
  }
}

TagSet TagHierarchy::sem(const TagId& tag) const {
  require_node(tag);
  TagSet out{tag};
  std::deque<TagId> queue{tag};
  while (!queue.empty()) {
    const TagId cur = std::move(queue.front());
    queue.pop_front();
    for (const auto& c : children(cur)) {
      if (out.insert(c).second) queue.push_back(c);
    }
  }
  return out;
}

TagSet TagHierarchy::fgts() const {
  TagSet out;
  for (const auto& n : nodes_) {
    if (children(n).empty()) out.insert(n);
  }
  return out;
}

TagSet TagHierarchy::fine(const TagId& tag) const {
  TagSet out;
  for (const auto& t : sem(tag)) {
    if (children(t).empty()) out.insert(t);
  }
  return out;
}

std::string TagHierarchy::serialize() const {
  std::string out;
  if (extended_) {
    out += "# extended\n";
    out += "fgts";
    for (const auto& f : fgts()) out += " " + f;
    out += "\n";
  }
  for (const auto& [child, parent] : edges()) {
    out += "edge " + child + " " + parent + "\n";
  }
  for (const auto& [name, members] : tagsets_) {
    out += "tagset " + name;
    for (const auto& m : members) out += " " + m;
    out += "\n";
  }
  return out;
}

void TagHierarchy::save(const std::filesystem::path& path) const {
  internal::write_file(path, serialize());
}

// ---------------------------------------------------------------------------
// ExtendedHierarchy

ExtendedHierarchy ExtendedHierarchy::extend(const TagHierarchy& base) {
  base.validate();
  if (base.extended()) {
    throw Error(ErrorCode::kValidation, "hierarchy is already extended");
  }
  if (base.has_tagset(std::string(kFineTagset))) {
    throw Error(ErrorCode::kValidation,
                "tagset name '" + std::string(kFineTagset) + "' is reserved");
  }

  ExtendedHierarchy eh;
  TagHierarchy& g = eh.graph_;
  g = base;
  auto claim = [&g](const TagId& name) {
    if (g.has_node(name)) {
      throw Error(ErrorCode::kValidation,
                  "synthesized tag '" + name + "' collides with a declared tag");
    }
  };

  const TagSet initial_fine = base.fgts();
  for (const auto& d : base.nodes()) {
    if (initial_fine.count(d)) continue;
    const TagId other = other_name(d);
    claim(other);
    g.add_edge(other, d);
    ++eh.stats_.added_nodes;
    ++eh.stats_.added_edges;
  }

  const TagId fg_other(kFineOther);
  claim(fg_other);
  g.add_node(fg_other);
  ++eh.stats_.added_nodes;

  const TagSet fine_tags = g.fgts();
  for (const auto& [name, members] : base.tagsets()) {
    const TagId other = other_name(name);
    claim(other);
    TagSet covered;
    for (const auto& d : members) {
      const TagSet s = g.sem(d);
      covered.insert(s.begin(), s.end());
    }
    g.add_node(other);
    ++eh.stats_.added_nodes;
    for (const auto& f : fine_tags) {
      if (covered.count(f)) continue;
      g.add_edge(f, other);
      ++eh.stats_.added_edges;
    }
    g.add_to_tagset(name, other);
  }
  g.set_extended(true);
  g.validate();
  eh.build_partitions();
  return eh;
}

ExtendedHierarchy ExtendedHierarchy::from_extended(TagHierarchy graph) {
  if (!graph.extended()) {
    throw Error(ErrorCode::kValidation, "hierarchy is not extended");
  }
  graph.validate();
  if (!graph.declared_fgts().empty() && graph.declared_fgts() != graph.fgts()) {
    throw Error(ErrorCode::kValidation,
                "declared fgts does not match the graph's fine-grained tags");
  }
  if (!graph.has_node(TagId(kFineOther))) {
    throw Error(ErrorCode::kValidation, "extended hierarchy lacks FG-Other");
  }
  for (const auto& [name, members] : graph.tagsets()) {
    if (!members.count(other_name(name))) {
      throw Error(ErrorCode::kValidation,
                  "extended tagset '" + name + "' lacks " + other_name(name));
    }
  }
  ExtendedHierarchy eh;
  eh.graph_ = std::move(graph);
  eh.build_partitions();
  return eh;
}

void ExtendedHierarchy::build_partitions() {
  const TagSet fine_tags = graph_.fgts();
  fgts_.assign(fine_tags.begin(), fine_tags.end());
  fine_map_.clear();
  partition_.clear();

  for (const auto& [name, members] : graph_.tagsets()) {
    auto& fines = fine_map_[name];
    auto& owners = partition_[name];
    for (const auto& t : members) {
      fines[t] = graph_.fine(t);
      for (const auto& f : fines[t]) {
        auto [it, inserted] = owners.emplace(f, t);
        if (!inserted) {
          throw Error(ErrorCode::kValidation,
                      "tagset '" + name + "' does not partition the fine tags: '" +
                          f + "' is covered by both '" + it->second +
                          "' and '" + t + "'");
        }
      }
    }
    for (const auto& f : fgts_) {
      if (!owners.count(f)) {
        throw Error(ErrorCode::kValidation, "tagset '" + name +
                                                "' does not cover fine tag '" +
                                                f + "'");
      }
    }
  }

  const std::string fine_name(kFineTagset);
  for (const auto& f : fgts_) {
    fine_map_[fine_name][f] = TagSet{f};
    partition_[fine_name][f] = f;
  }
}

bool ExtendedHierarchy::is_fine(const TagId& tag) const {
  return graph_.has_node(tag) && graph_.children(tag).empty();
}

bool ExtendedHierarchy::has_tagset(const std::string& name) const {
  return partition_.count(name) > 0;
}

std::vector<TagId> ExtendedHierarchy::tagset_members(
    const std::string& name) const {
  auto it = fine_map_.find(name);
  if (it == fine_map_.end()) {
    throw Error(ErrorCode::kValidation, "unknown tagset '" + name + "'");
  }
  std::vector<TagId> out;
  out.reserve(it->second.size());
  for (const auto& [tag, fines] : it->second) out.push_back(tag);
  return out;
}

std::vector<std::string> ExtendedHierarchy::tagset_names() const {
  std::vector<std::string> out;
  for (const auto& [name, members] : graph_.tagsets()) out.push_back(name);
  return out;
}

TagId ExtendedHierarchy::other_tag(const std::string& tagset) const {
  if (!has_tagset(tagset)) {
    throw Error(ErrorCode::kValidation, "unknown tagset '" + tagset + "'");
  }
  if (tagset == kFineTagset) return TagId(kFineOther);
  return other_name(tagset);
}

const TagSet& ExtendedHierarchy::fine(const std::string& tagset,
                                      const TagId& tag) const {
  auto it = fine_map_.find(tagset);
  if (it == fine_map_.end()) {
    throw Error(ErrorCode::kValidation, "unknown tagset '" + tagset + "'");
  }
  auto jt = it->second.find(tag);
  if (jt == it->second.end()) {
    throw Error(ErrorCode::kValidation,
                "tag '" + tag + "' is not in tagset '" + tagset + "'");
  }
  return jt->second;
}

const TagId& ExtendedHierarchy::map_fine_to_tagset(
    const TagId& fine_tag, const std::string& tagset) const {
  auto it = partition_.find(tagset);
  if (it == partition_.end()) {
    throw Error(ErrorCode::kValidation, "unknown tagset '" + tagset + "'");
  }
  auto jt = it->second.find(fine_tag);
  if (jt == it->second.end()) {
    throw Error(ErrorCode::kValidation,
                "'" + fine_tag + "' is not a fine-grained tag");
  }
  return jt->second;
}

TagId ExtendedHierarchy::map_tag(const TagId& tag,
                                 const std::string& tagset) const {
  auto it = fine_map_.find(tagset);
  if (it == fine_map_.end()) {
    throw Error(ErrorCode::kValidation, "unknown tagset '" + tagset + "'");
  }
  if (!graph_.has_node(tag)) {
    throw Error(ErrorCode::kValidation, "unknown tag '" + tag + "'");
  }
  const auto& members = it->second;
  if (members.count(tag)) return tag;

  TagSet visited{tag};
  std::vector<TagId> frontier{tag};
  while (!frontier.empty()) {
    TagSet next;
    for (const auto& cur : frontier) {
      for (const auto& p : graph_.parents(cur)) {
        if (visited.insert(p).second) next.insert(p);
      }
    }
    for (const auto& cand : next) {
      if (members.count(cand)) return cand;
    }
    frontier.assign(next.begin(), next.end());
  }
  return other_tag(tagset);
}

std::vector<TagSet> ExtendedHierarchy::agree_sets(
    std::span<const TagId> gold, const std::string& tagset) const {
  std::vector<TagSet> out;
  out.reserve(gold.size());
  for (const auto& y : gold) out.push_back(fine(tagset, y));
  return out;
}

}  // namespace hiertag
