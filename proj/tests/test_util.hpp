#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kgretro/graph.hpp"

namespace testutil {

// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("kgretro_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::filesystem::path file(const std::string& name) const {
    return path / name;
  }
};

inline void write_file(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Random typed digraph: n vertices, the requested relations, roughly
// edges_per_rel edges each, no self loops, no duplicates.
inline kgretro::KnowledgeGraph random_graph(int n, int n_rels,
                                            int edges_per_rel,
                                            uint64_t seed) {
  std::vector<kgretro::Vertex> verts;
  for (int i = 0; i < n; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "v%04d", i);
    verts.push_back({buf, ""});
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::vector<kgretro::Edge> edges;
  for (int r = 0; r < n_rels; ++r) {
    std::string rel = "rel" + std::to_string(r);
    std::set<std::pair<int, int>> seen;
    int made = 0, guard = 0;
    while (made < edges_per_rel && guard++ < edges_per_rel * 50) {
      int i = pick(rng), j = pick(rng);
      if (i == j || seen.count({i, j})) continue;
      seen.insert({i, j});
      edges.push_back({verts[i].id, rel, verts[j].id});
      ++made;
    }
  }
  return kgretro::KnowledgeGraph(verts, edges);
}

}  // namespace testutil
