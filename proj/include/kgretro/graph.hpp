#pragma once

#include <algorithm>
#include <compare>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgretro/common.hpp"

namespace kgretro {

struct Vertex {
  std::string id;
  std::string cls;  // empty for classless graphs
};

struct Edge {
  std::string src, rel, dst;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Immutable typed digraph. Vertices and edges are stored sorted, adjacency
// and degree tables are built once at construction.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  KnowledgeGraph(std::vector<Vertex> vertices, std::vector<Edge> edges)
      : vertices_(std::move(vertices)), edges_(std::move(edges)) {
    std::sort(vertices_.begin(), vertices_.end(),
              [](const Vertex& a, const Vertex& b) { return a.id < b.id; });
    for (size_t i = 0; i + 1 < vertices_.size(); ++i)
      if (vertices_[i].id == vertices_[i + 1].id)
        throw input_error("duplicate vertex id '" + vertices_[i].id + "'");
    for (size_t i = 0; i < vertices_.size(); ++i)
      index_[vertices_[i].id] = i;

    std::sort(edges_.begin(), edges_.end());
    for (size_t i = 0; i + 1 < edges_.size(); ++i)
      if (edges_[i] == edges_[i + 1])
        throw input_error("duplicate edge " + edges_[i].src + " " +
                          edges_[i].rel + " " + edges_[i].dst);

    out_adj_.resize(vertices_.size());
    in_adj_.resize(vertices_.size());
    for (size_t e = 0; e < edges_.size(); ++e) {
      const Edge& ed = edges_[e];
      if (ed.src == ed.dst)
        throw input_error("self loop on '" + ed.src + "'");
      auto si = index_.find(ed.src);
      auto di = index_.find(ed.dst);
      if (si == index_.end() || di == index_.end())
        throw input_error("edge endpoint not in vertex set: " + ed.src +
                          " " + ed.rel + " " + ed.dst);
      out_adj_[si->second].push_back(e);
      in_adj_[di->second].push_back(e);
      out_deg_[{si->second, ed.rel}]++;
      rels_.insert(ed.rel);
    }
  }

  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }

  std::vector<std::string> relations() const {
    return {rels_.begin(), rels_.end()};
  }

  bool has_vertex(const std::string& id) const { return index_.count(id); }

  size_t vertex_index(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end())
      throw input_error("unknown vertex '" + id + "'");
    return it->second;
  }

  const std::string& vertex_class(const std::string& id) const {
    return vertices_[vertex_index(id)].cls;
  }

  size_t out_degree(const std::string& id, const std::string& rel) const {
    auto it = out_deg_.find({vertex_index(id), rel});
    return it == out_deg_.end() ? 0 : it->second;
  }

  bool has_edge(const std::string& src, const std::string& rel,
                const std::string& dst) const {
    return std::binary_search(edges_.begin(), edges_.end(),
                              Edge{src, rel, dst});
  }

  // Edge indexes into edges(), by endpoint.
  const std::vector<size_t>& out_edges(size_t vidx) const {
    return out_adj_[vidx];
  }
  const std::vector<size_t>& in_edges(size_t vidx) const {
    return in_adj_[vidx];
  }

 private:
  std::vector<Vertex> vertices_;
  std::vector<Edge> edges_;
  std::unordered_map<std::string, size_t> index_;
  std::set<std::string> rels_;
  std::vector<std::vector<size_t>> out_adj_, in_adj_;
  std::map<std::pair<size_t, std::string>, size_t> out_deg_;
};

struct LoadReport {
  KnowledgeGraph graph;
  size_t duplicates_dropped = 0;
  size_t self_loops_dropped = 0;
};

// Tab-separated "src<TAB>rel<TAB>dst" with '#' comments. Vertices are the
// edge endpoints plus any ids listed in the optional "id<TAB>class" file.
inline LoadReport load_edgelist(const std::string& path,
                                const std::string& class_path = "") {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open edge list '" + path + "'");

  LoadReport rep;
  std::set<Edge> seen;
  std::vector<Edge> edges;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split(line, '\t');
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() ||
        fields[2].empty())
      throw input_error("malformed edge at " + path + " line " +
                        std::to_string(lineno) +
                        " (want src<TAB>rel<TAB>dst)");
    Edge e{fields[0], fields[1], fields[2]};
    if (e.src == e.dst) {
      ++rep.self_loops_dropped;
      continue;
    }
    if (!seen.insert(e).second) {
      ++rep.duplicates_dropped;
      continue;
    }
    edges.push_back(std::move(e));
  }
  if (edges.empty())
    throw input_error("edge list '" + path + "' contains no edges");

  std::map<std::string, std::string> classes;
  if (!class_path.empty()) {
    std::ifstream cin_(class_path);
    if (!cin_) throw input_error("cannot open class file '" + class_path + "'");
    size_t cl = 0;
    while (std::getline(cin_, line)) {
      ++cl;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      auto fields = split(line, '\t');
      if (fields.size() != 2 || fields[0].empty() || fields[1].empty())
        throw input_error("malformed class row at " + class_path + " line " +
                          std::to_string(cl) + " (want id<TAB>class)");
      auto [it, fresh] = classes.emplace(fields[0], fields[1]);
      if (!fresh && it->second != fields[1])
        throw input_error("conflicting classes for '" + fields[0] + "' in " +
                          class_path);
    }
  }

  std::set<std::string> ids;
  for (const auto& e : edges) {
    ids.insert(e.src);
    ids.insert(e.dst);
  }
  for (const auto& [id, cls] : classes) ids.insert(id);
  std::vector<Vertex> vertices;
  for (const auto& id : ids) {
    auto it = classes.find(id);
    vertices.push_back({id, it == classes.end() ? "" : it->second});
  }
  rep.graph = KnowledgeGraph(std::move(vertices), std::move(edges));
  return rep;
}

inline void save_edgelist(const KnowledgeGraph& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot write '" + path + "'");
  for (const auto& e : g.edges())
    out << e.src << '\t' << e.rel << '\t' << e.dst << '\n';
}

inline KnowledgeGraph remove_relation(const KnowledgeGraph& g,
                                      const std::string& rel) {
  auto rels = g.relations();
  if (std::find(rels.begin(), rels.end(), rel) == rels.end()) {
    std::string avail;
    for (const auto& r : rels) avail += (avail.empty() ? "" : ", ") + r;
    throw input_error("relation '" + rel + "' not in graph (available: " +
                      avail + ")");
  }
  std::vector<Edge> kept;
  for (const auto& e : g.edges())
    if (e.rel != rel) kept.push_back(e);
  return KnowledgeGraph(g.vertices(), std::move(kept));
}

struct RelationStats {
  std::string rel;
  size_t count = 0;
  std::string signature;  // "srcclass→dstclass", or "mixed"
};

struct GraphStats {
  std::vector<RelationStats> relations;
  std::map<std::string, size_t> class_counts;  // nonempty classes only
};

inline GraphStats graph_stats(const KnowledgeGraph& g) {
  GraphStats s;
  std::map<std::string, size_t> counts;
  std::map<std::string, std::set<std::pair<std::string, std::string>>> sigs;
  for (const auto& e : g.edges()) {
    counts[e.rel]++;
    sigs[e.rel].insert({g.vertex_class(e.src), g.vertex_class(e.dst)});
  }
  for (const auto& [rel, count] : counts) {
    RelationStats row{rel, count, ""};
    const auto& sg = sigs[rel];
    if (sg.size() == 1) {
      auto render = [](const std::string& c) { return c.empty() ? "-" : c; };
      row.signature =
          render(sg.begin()->first) + "→" + render(sg.begin()->second);
    } else {
      row.signature = "mixed";
    }
    s.relations.push_back(std::move(row));
  }
  std::sort(s.relations.begin(), s.relations.end(),
            [](const RelationStats& a, const RelationStats& b) {
              return a.count != b.count ? a.count > b.count : a.rel < b.rel;
            });
  for (const auto& v : g.vertices())
    if (!v.cls.empty()) s.class_counts[v.cls]++;
  return s;
}

inline std::string format_stats(const GraphStats& s) {
  std::ostringstream out;
  for (const auto& r : s.relations)
    out << r.rel << '\t' << r.count << '\t' << r.signature << '\n';
  if (!s.class_counts.empty()) {
    out << '\n';
    for (const auto& [cls, n] : s.class_counts) out << cls << '\t' << n << '\n';
  }
  return out.str();
}

}  // namespace kgretro
