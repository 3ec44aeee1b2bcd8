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

#include <doctest.h>

#include <string>

#include "hiertag/error.hpp"
#include "hiertag/hierarchy.hpp"
#include "hiertag/random.hpp"
#include "oracles.hpp"
#include "text_util.hpp"

using hiertag::Error;
using hiertag::ErrorCode;
using hiertag::ExtendedHierarchy;
using hiertag::TagHierarchy;
using hiertag::TagSet;

namespace {

TagHierarchy clinic() {
  return TagHierarchy::load(oracle::data_dir() / "clinic.hier");
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kRuntime;
}

// Random DAG over n nodes: edges only go from higher to lower index.
TagHierarchy random_dag(hiertag::Rng& rng, std::size_t n) {
  TagHierarchy h;
  for (std::size_t i = 0; i < n; ++i) h.add_node("n" + std::to_string(i));
  for (std::size_t c = 1; c < n; ++c) {
    for (std::size_t p = 0; p < c; ++p) {
      if (rng.bernoulli(0.3)) {
        h.add_edge("n" + std::to_string(c), "n" + std::to_string(p));
      }
    }
  }
  return h;
}

}  // namespace

TEST_CASE("parse builds edges and tagsets") {
  const auto h = TagHierarchy::parse(
      "edge Street Location\nedge City Location\ntagset T1 Location");
  CHECK(h.parents("Street") == TagSet{"Location"});
  CHECK(h.parents("City") == TagSet{"Location"});
  CHECK(h.children("Location") == TagSet{"City", "Street"});
  CHECK(h.tagset("T1") == TagSet{"Location"});
  CHECK(h.edge_count() == 2);
}

TEST_CASE("empty input is an empty hierarchy") {
  const auto h = TagHierarchy::parse("");
  CHECK(h.nodes().empty());
  CHECK(h.tagsets().empty());
}

TEST_CASE("cycles are rejected") {
  try {
    TagHierarchy::parse("edge A B\nedge B A");
    FAIL("cycle accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kValidation);
    CHECK(std::string(e.what()).find("cycle") != std::string::npos);
  }
  CHECK(code_of([] { TagHierarchy::parse("edge A A"); }) ==
        ErrorCode::kValidation);
}

TEST_CASE("syntax errors report the line") {
  try {
    TagHierarchy::parse("edge A B\n\nedge C\n");
    FAIL("bad line accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParse);
    CHECK(std::string(e.what()).find("3") != std::string::npos);
  }
  CHECK(code_of([] { TagHierarchy::parse("node A\n"); }) == ErrorCode::kParse);
  CHECK(code_of([] { TagHierarchy::parse("tagset T A\ntagset T B\n"); }) ==
        ErrorCode::kParse);
  CHECK(code_of([] { TagHierarchy::parse("fgts A\n"); }) == ErrorCode::kParse);
}

TEST_CASE("sem and fine on the clinic hierarchy") {
  const auto h = clinic();
  CHECK(h.sem("Name") == TagSet{"FirstName", "LastName", "Name"});
  CHECK(h.fine("Name") == TagSet{"FirstName", "LastName"});
  CHECK(h.sem("Date") == TagSet{"Date"});
  CHECK(h.fine("Hospital") == TagSet{"Hospital"});
  CHECK(code_of([&] { h.sem("Nope"); }) == ErrorCode::kValidation);
}

TEST_CASE("sem matches reachability on random DAGs") {
  hiertag::Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto h = random_dag(rng, 2 + rng.below(7));
    const TagSet fg = h.fgts();
    for (const auto& d : h.nodes()) {
      const auto expect = oracle::descendants_or_self(h, d);
      CHECK(h.sem(d) == TagSet(expect.begin(), expect.end()));
      TagSet fine;
      for (const auto& t : expect) {
        if (fg.count(t)) fine.insert(t);
      }
      CHECK(h.fine(d) == fine);
      for (const auto& p : h.parents(d)) {
        const auto sc = h.sem(d);
        const auto sp = h.sem(p);
        CHECK(std::includes(sp.begin(), sp.end(), sc.begin(), sc.end()));
      }
    }
  }
}

TEST_CASE("extension adds the Other tags") {
  const auto base = clinic();
  const auto eh = ExtendedHierarchy::extend(base);
  const auto& g = eh.graph();
  CHECK(g.parents("Age-Other") == TagSet{"Age", "T2-Other", "T3-Other"});
  CHECK(g.parents("Name-Other") == TagSet{"Name", "T2-Other"});
  CHECK(g.parents("Location-Other") ==
        TagSet{"Location", "T2-Other", "T3-Other"});
  CHECK(eh.is_fine("FG-Other"));
  for (const auto& t : {"T1", "T2", "T3"}) {
    const std::string other = std::string(t) + "-Other";
    CHECK(g.tagset(t).count(other) == 1);
    CHECK(eh.fine(t, other).count("FG-Other") == 1);
    CHECK(eh.map_fine_to_tagset("FG-Other", t) == other);
  }
  CHECK(eh.fine("T1", "Name") == TagSet{"FirstName", "LastName", "Name-Other"});
  // Three d-Other nodes, FG-Other, three T-Other tags.
  CHECK(eh.stats().added_nodes == 7);
  CHECK(g.nodes().size() == base.nodes().size() + 7);
  CHECK(g.edge_count() == base.edge_count() + eh.stats().added_edges);
  CHECK(eh.graph().extended());
  // Age>90 is a T2 member, so Age-Other falls to T2-Other.
  CHECK(eh.map_fine_to_tagset("Age-Other", "T2") == "T2-Other");
  CHECK(eh.map_fine_to_tagset("Street", "T1") == "Location");
  CHECK(eh.map_fine_to_tagset("Street", "T3") == "T3-Other");
}

TEST_CASE("extended tagsets partition the fine tags") {
  const auto eh = ExtendedHierarchy::extend(clinic());
  for (const auto& name : eh.tagset_names()) {
    std::map<std::string, int> hits;
    for (const auto& t : eh.tagset_members(name)) {
      for (const auto& f : eh.fine(name, t)) {
        ++hits[f];
        CHECK(eh.map_fine_to_tagset(f, name) == t);
      }
    }
    CHECK(hits.size() == eh.fgts().size());
    for (const auto& [f, n] : hits) CHECK(n == 1);
  }
}

TEST_CASE("mapping agrees with out-edge traversal") {
  const auto eh = ExtendedHierarchy::extend(clinic());
  for (const auto& name : eh.tagset_names()) {
    const auto members = eh.tagset_members(name);
    const std::set<std::string> ms(members.begin(), members.end());
    for (const auto& f : eh.fgts()) {
      const auto expect = oracle::traverse_to_tagset(eh.graph(), f, ms,
                                                     eh.other_tag(name));
      CHECK(eh.map_fine_to_tagset(f, name) == expect);
      CHECK(eh.map_tag(f, name) == expect);
    }
    for (const auto& t : eh.graph().nodes()) {
      CHECK(eh.map_tag(t, name) ==
            oracle::traverse_to_tagset(eh.graph(), t, ms, eh.other_tag(name)));
    }
  }
}

TEST_CASE("fine tagset maps every fine tag to itself") {
  const auto eh = ExtendedHierarchy::extend(clinic());
  CHECK(eh.has_tagset("FGTS"));
  for (const auto& f : eh.fgts()) {
    CHECK(eh.map_fine_to_tagset(f, "FGTS") == f);
  }
  CHECK(eh.other_tag("FGTS") == "FG-Other");
}

TEST_CASE("agree sets follow Fine") {
  const auto eh = ExtendedHierarchy::extend(clinic());
  const std::vector<std::string> y{"Location", "Location"};
  const auto sets = eh.agree_sets(y, "T1");
  for (const auto& s : sets) {
    CHECK(s.count("Hospital") == 1);
    CHECK(s.count("Street") == 1);
    CHECK(s.count("City") == 1);
    CHECK(s.count("LastName") == 0);
  }
  const std::vector<std::string> fine{"FirstName", "City", "Date"};
  for (const auto& s : eh.agree_sets(fine, "T2")) CHECK(s.size() == 1);

  // The product of the sets is exactly the set of agreeing fine sequences.
  const std::vector<std::string> mixed{"Name", "T1-Other", "Age", "Date"};
  const auto ms = eh.agree_sets(mixed, "T1");
  std::size_t product = 1;
  for (const auto& s : ms) product *= s.size();
  std::size_t agreeing = 0;
  const auto& fg = eh.fgts();
  std::vector<std::size_t> idx(mixed.size(), 0);
  while (true) {
    bool ok = true;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      ok = ok && eh.map_fine_to_tagset(fg[idx[i]], "T1") == mixed[i];
    }
    agreeing += ok;
    std::size_t i = 0;
    while (i < idx.size() && ++idx[i] == fg.size()) idx[i++] = 0;
    if (i == idx.size()) break;
  }
  CHECK(agreeing == product);
  CHECK(code_of([&] {
          eh.agree_sets(std::vector<std::string>{"City"}, "T1");
        }) == ErrorCode::kValidation);
}

TEST_CASE("overlapping tagset members are reported") {
  const auto h = TagHierarchy::parse(
      "edge City Location\nedge City Region\ntagset T Location Region\n");
  try {
    ExtendedHierarchy::extend(h);
    FAIL("overlap accepted");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(e.code() == ErrorCode::kValidation);
    CHECK(msg.find("'T'") != std::string::npos);
    CHECK(msg.find("City") != std::string::npos);
    CHECK(msg.find("Location") != std::string::npos);
    CHECK(msg.find("Region") != std::string::npos);
  }
  CHECK(code_of([] {
          ExtendedHierarchy::extend(
              TagHierarchy::parse("edge A B\ntagset T A B\n"));
        }) == ErrorCode::kValidation);
}

TEST_CASE("double extension and name clashes are rejected") {
  const auto eh = ExtendedHierarchy::extend(clinic());
  CHECK(code_of([&] { ExtendedHierarchy::extend(eh.graph()); }) ==
        ErrorCode::kValidation);
  CHECK(code_of([] {
          ExtendedHierarchy::extend(
              TagHierarchy::parse("edge A B\nedge B-Other C\n"));
        }) == ErrorCode::kValidation);
  CHECK(code_of([] {
          ExtendedHierarchy::extend(TagHierarchy::parse("tagset T FG-Other\n"));
        }) == ErrorCode::kValidation);
  CHECK(code_of([] {
          ExtendedHierarchy::extend(TagHierarchy::parse("tagset FGTS A\n"));
        }) != ErrorCode::kRuntime);
}

TEST_CASE("extended hierarchy survives serialization") {
  const auto eh = ExtendedHierarchy::extend(clinic());
  const std::string text = eh.serialize();
  CHECK(text.rfind("# extended\n", 0) == 0);
  const auto back = ExtendedHierarchy::from_extended(TagHierarchy::parse(text));
  CHECK(back.serialize() == text);
  CHECK(back.fgts() == eh.fgts());
  for (const auto& name : eh.tagset_names()) {
    for (const auto& f : eh.fgts()) {
      CHECK(back.map_fine_to_tagset(f, name) == eh.map_fine_to_tagset(f, name));
    }
  }
  CHECK(code_of([&] {
          ExtendedHierarchy::from_extended(TagHierarchy::parse(
              "# extended\nfgts A B\nedge A C\ntagset T C T-Other\n"));
        }) == ErrorCode::kValidation);
}

TEST_CASE("canonical hierarchy files round-trip byte for byte") {
  const auto path = oracle::data_dir() / "canonical.hier";
  const std::string text = hiertag::internal::read_file(path);
  CHECK(TagHierarchy::parse(text).serialize() == text);
  const auto ext_path = oracle::data_dir() / "canonical_extended.hier";
  const std::string ext = hiertag::internal::read_file(ext_path);
  CHECK(TagHierarchy::parse(ext).serialize() == ext);
}

TEST_CASE("extension preserves acyclicity on random hierarchies") {
  hiertag::Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    auto h = random_dag(rng, 2 + rng.below(7));
    // Members with pairwise disjoint Sem sets always partition.
    TagSet members;
    for (const auto& n : h.nodes()) {
      bool related = false;
      const TagSet sn = h.sem(n);
      for (const auto& m : members) {
        for (const auto& t : h.sem(m)) related = related || sn.count(t);
      }
      if (!related && rng.bernoulli(0.6)) members.insert(n);
    }
    h.add_tagset("T", members);
    const auto eh = ExtendedHierarchy::extend(h);
    eh.graph().validate();
    for (const auto& n : h.nodes()) {
      if (!h.fgts().count(n)) {
        CHECK(eh.graph().parents(hiertag::other_name(n)).count(n) == 1);
      }
    }
    for (const auto& f : eh.fgts()) CHECK(eh.graph().children(f).empty());
  }
}
