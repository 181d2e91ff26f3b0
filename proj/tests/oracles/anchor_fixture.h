// Synthetic anchor graph with known per-rule casualties: 10 pages x 5
// anchors; 5 anchors fail the frequency rule, 3 the length rule and 4 the
// overlap rule, each failing exactly one rule. 50 - 12 = 38 survive.
#pragma once

#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qreform/anchor_corpus.h"

namespace testdata {

struct AnchorGraph {
  std::vector<qreform::AnchorRecord> records;
  int freq_failures = 5;
  int length_failures = 3;
  int overlap_failures = 4;
};

inline AnchorGraph anchor_graph() {
  AnchorGraph g;
  for (int k = 0; k < 10; ++k) {
    const std::string url = "p" + std::to_string(k);
    const std::string topic = "topic" + std::to_string(k) + " guide";
    auto add = [&](std::string text, std::int64_t f) {
      g.records.push_back({url, std::move(text), f});
    };
    add(topic, 20);
    add("best " + topic, 5);
    int passing = 3;
    if (k < 5) {
      add(topic + " online", 1);
      --passing;
    }
    if (k < 3) {
      add(topic + " " + std::string(40, 'x'), 4);
      --passing;
    }
    if (k >= 3 && k < 7) {
      add("click here", 3);
      --passing;
    }
    const char* extras[] = {"free", "reviews", "tips"};
    for (int i = 0; i < passing; ++i) add(topic + " " + extras[i], 2 + i);
  }
  return g;
}

inline double jaccard(const std::string& a, const std::string& b) {
  std::set<std::string> wa, wb, both;
  std::istringstream sa(a), sb(b);
  for (std::string w; sa >> w;) wa.insert(w);
  for (std::string w; sb >> w;) wb.insert(w);
  if (wa.empty() && wb.empty()) return 1.0;
  int inter = 0;
  for (const auto& w : wa) inter += wb.count(w) ? 1 : 0;
  return static_cast<double>(inter) / static_cast<double>(wa.size() + wb.size() - inter);
}

struct Casualties {
  std::size_t survivors = 0;
  int freq = 0;
  int length = 0;
  int overlap = 0;
};

// Per-anchor evaluation against a linear-scan canonical anchor. Fixture
// anchors are ASCII, so byte length is character length.
inline Casualties count_casualties(const std::vector<qreform::Session>& sessions) {
  Casualties c;
  for (const auto& s : sessions) {
    std::string best;
    std::int64_t best_freq = -1;
    for (const auto& a : s.anchors)
      if (a.freq > best_freq || (a.freq == best_freq && a.text < best)) {
        best = a.text;
        best_freq = a.freq;
      }
    for (const auto& a : s.anchors) {
      const bool f = a.freq >= 2;
      const bool l = a.text.size() < 50 && best.size() < 50;
      const bool o = jaccard(a.text, best) >= 0.3;
      c.freq += f ? 0 : 1;
      c.length += l ? 0 : 1;
      c.overlap += o ? 0 : 1;
      c.survivors += (f && l && o) ? 1 : 0;
    }
  }
  return c;
}

inline std::size_t count_surviving(const std::vector<qreform::Session>& sessions) {
  return count_casualties(sessions).survivors;
}

}  // namespace testdata
