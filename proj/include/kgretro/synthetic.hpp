#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "kgretro/common.hpp"
#include "kgretro/embeddings.hpp"
#include "kgretro/graph.hpp"
#include "kgretro/penalty.hpp"

namespace kgretro {

struct SynthOptions {
  int n = 500;
  Eigen::Index d = 10;
  int relations = 3;
  double sigma = 0.3;
  double t_scale = 0.5;
  int mean_out_degree = 3;
  uint64_t seed = 0;
};

struct SynthData {
  KnowledgeGraph graph;
  EmbeddingSet truth;
  EmbeddingSet noisy;
  std::map<std::string, RelationParams> planted;
  std::map<std::string, double> thresholds;  // largest kept pair distance
};

namespace detail {

// Vectors are scaled so the expected squared norm is one regardless of
// dimension; noise is added per component, so sigma near 1/sqrt(d) already
// drowns most of the signal.
inline Eigen::VectorXd unit_scale_gaussian(Eigen::Index d,
                                           std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd v(d);
  for (Eigen::Index k = 0; k < d; ++k) v[k] = gauss(rng);
  return v / std::sqrt(static_cast<double>(d));
}

inline Eigen::MatrixXd random_proper_rotation(Eigen::Index d,
                                              std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd m(d, d);
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < d; ++c) m(r, c) = gauss(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index c = 0; c < d; ++c)
    if (r(c, c) < 0.0) q.col(c) = -q.col(c);
  if (q.determinant() < 0.0) q.col(d - 1) = -q.col(d - 1);
  return q;
}

}  // namespace detail

// Plants one rotation-plus-shift map per relation over Gaussian truth
// vectors, wires each relation to the n*mean_out_degree ordered pairs that
// fit its map best, and hands back noisy copies of the truth as the
// pretrained embeddings.
inline SynthData synth_graph(const SynthOptions& opt) {
  if (opt.n < 20)
    throw input_error("synthetic graphs need at least 20 vertices");
  if (opt.d < 2)
    throw input_error("synthetic graphs need dimension at least 2");
  if (opt.relations < 1)
    throw input_error("synthetic graphs need at least one relation");
  if (opt.sigma < 0.0) throw input_error("sigma must be nonnegative");
  if (opt.t_scale < 0.0) throw input_error("t-scale must be nonnegative");
  if (opt.mean_out_degree < 1 || opt.mean_out_degree > opt.n - 2)
    throw input_error("mean out-degree must lie in [1, n-2]");

  const size_t n = static_cast<size_t>(opt.n);
  size_t width = 1;
  for (size_t top = n - 1; top >= 10; top /= 10) ++width;
  std::vector<std::string> ids(n);
  std::vector<Vertex> vertices(n);
  for (size_t i = 0; i < n; ++i) {
    std::string num = std::to_string(i);
    ids[i] = "v" + std::string(width - num.size(), '0') + num;
    vertices[i] = Vertex{ids[i], ""};
  }

  SynthData data;
  std::mt19937_64 truth_rng(mix_seed(opt.seed, 0x74727574ULL));
  std::vector<Eigen::VectorXd> truth(n);
  for (size_t i = 0; i < n; ++i) {
    truth[i] = detail::unit_scale_gaussian(opt.d, truth_rng);
    data.truth.insert(ids[i], truth[i]);
  }

  std::vector<Edge> edges;
  const size_t per_rel = n * static_cast<size_t>(opt.mean_out_degree);
  for (int r = 0; r < opt.relations; ++r) {
    const std::string rel = "rel" + std::to_string(r);
    std::mt19937_64 rel_rng(
        mix_seed(opt.seed, 0x726f7400ULL + static_cast<uint64_t>(r)));
    RelationParams p;
    p.rel = rel;
    p.kind = PenaltyKind::linear;
    p.A = detail::random_proper_rotation(opt.d, rel_rng);
    Eigen::VectorXd dir = detail::unit_scale_gaussian(opt.d, rel_rng);
    p.b = opt.t_scale * dir / dir.norm();

    std::vector<std::tuple<double, size_t, size_t>> pairs;
    pairs.reserve(n * (n - 1));
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        pairs.emplace_back((p.A * truth[j] + p.b - truth[i]).norm(), i, j);
      }
    }
    std::nth_element(pairs.begin(), pairs.begin() + (per_rel - 1),
                     pairs.end());
    std::sort(pairs.begin(), pairs.begin() + per_rel);
    data.thresholds[rel] = std::get<0>(pairs[per_rel - 1]);
    for (size_t k = 0; k < per_rel; ++k)
      edges.push_back(Edge{ids[std::get<1>(pairs[k])], rel,
                           ids[std::get<2>(pairs[k])]});
    data.planted.emplace(rel, std::move(p));
  }
  data.graph = KnowledgeGraph(std::move(vertices), std::move(edges));

  std::mt19937_64 noise_rng(mix_seed(opt.seed, 0x6e6f6973ULL));
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (size_t i = 0; i < n; ++i) {
    Eigen::VectorXd noisy = truth[i];
    if (opt.sigma > 0.0)
      for (Eigen::Index k = 0; k < opt.d; ++k)
        noisy[k] += opt.sigma * gauss(noise_rng);
    data.noisy.insert(ids[i], std::move(noisy));
  }
  return data;
}

}  // namespace kgretro
