#pragma once

#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "kgretro/common.hpp"
#include "kgretro/graph.hpp"

namespace kgretro {

enum class NegStrategy { same_source, class_restricted };

inline const char* strategy_name(NegStrategy s) {
  return s == NegStrategy::same_source ? "same-source" : "class-restricted";
}

inline NegStrategy parse_strategy(const std::string& s) {
  if (s == "same-source") return NegStrategy::same_source;
  if (s == "class-restricted") return NegStrategy::class_restricted;
  throw input_error("unknown negative sampling strategy '" + s +
                    "' (same-source, class-restricted)");
}

struct NegativeEdgeSet {
  std::vector<Edge> edges;  // sorted, disjoint from the positive edges
  uint64_t seed = 0;
  NegStrategy strategy = NegStrategy::same_source;
  size_t skipped = 0;                        // positives with no legal target
  std::vector<std::string> skipped_sources;  // distinct, sorted
};

// One corrupted edge (i, j', r) per positive edge (i, j, r): same source and
// relation, target drawn uniformly from the vertices that do not already
// form a positive edge. Sampling is without replacement within each
// (source, relation) group, so the result never collides with itself and
// per-source negative counts match per-source positive counts exactly.
inline NegativeEdgeSet sample_negative_edges(
    const KnowledgeGraph& g, const std::vector<std::string>& rels,
    uint64_t seed, NegStrategy strategy) {
  auto known = g.relations();
  for (const auto& r : rels)
    if (std::find(known.begin(), known.end(), r) == known.end())
      throw input_error("cannot sample negatives for unknown relation '" + r +
                        "'");
  std::set<std::string> scope(rels.begin(), rels.end());

  NegativeEdgeSet out;
  out.seed = seed;
  out.strategy = strategy;
  std::mt19937_64 rng(seed);

  size_t positives_in_scope = 0;
  std::set<std::string> skipped_sources;

  // edges() is sorted by (src, rel, dst), so groups are contiguous.
  const auto& edges = g.edges();
  size_t i = 0;
  while (i < edges.size()) {
    size_t j = i;
    while (j < edges.size() && edges[j].src == edges[i].src &&
           edges[j].rel == edges[i].rel)
      ++j;
    if (!scope.count(edges[i].rel)) {
      i = j;
      continue;
    }
    const std::string& src = edges[i].src;
    const std::string& rel = edges[i].rel;
    std::set<std::string> taken;  // positive targets plus drawn negatives
    for (size_t k = i; k < j; ++k) taken.insert(edges[k].dst);

    for (size_t k = i; k < j; ++k) {
      ++positives_in_scope;
      const std::string want_cls = strategy == NegStrategy::class_restricted
                                       ? g.vertex_class(edges[k].dst)
                                       : std::string();
      std::vector<const std::string*> pool;
      for (const auto& v : g.vertices()) {
        if (v.id == src || taken.count(v.id)) continue;
        if (strategy == NegStrategy::class_restricted && v.cls != want_cls)
          continue;
        pool.push_back(&v.id);
      }
      if (pool.empty()) {
        ++out.skipped;
        skipped_sources.insert(src);
        continue;
      }
      std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
      const std::string& dst = *pool[pick(rng)];
      taken.insert(dst);
      out.edges.push_back({src, rel, dst});
    }
    i = j;
  }

  if (positives_in_scope > 0 && out.edges.empty())
    throw input_error(
        "negative sampling failed: every source is saturated (no legal "
        "corrupted targets exist)");
  out.skipped_sources.assign(skipped_sources.begin(), skipped_sources.end());
  std::sort(out.edges.begin(), out.edges.end());
  return out;
}

inline void save_negatives(const NegativeEdgeSet& n, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot write '" + path + "'");
  for (const auto& e : n.edges)
    out << e.src << '\t' << e.rel << '\t' << e.dst << '\n';
}

}  // namespace kgretro
