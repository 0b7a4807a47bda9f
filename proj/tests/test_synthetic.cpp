#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <set>
#include <string>
#include <vector>

#include "kgretro/synthetic.hpp"
#include "test_util.hpp"

using namespace kgretro;

namespace {

bool same_embeddings(const EmbeddingSet& a, const EmbeddingSet& b) {
  if (a.size() != b.size()) return false;
  for (const auto& [id, v] : a.entries()) {
    if (!b.has(id)) return false;
    const Eigen::VectorXd& w = b.at(id);
    if (v.size() != w.size()) return false;
    for (Eigen::Index k = 0; k < v.size(); ++k)
      if (v[k] != w[k]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("same options reproduce the dataset bit for bit") {
  SynthOptions opt;
  opt.n = 40;
  opt.d = 3;
  opt.sigma = 0.25;
  opt.seed = 9;
  SynthData a = synth_graph(opt);
  SynthData b = synth_graph(opt);

  CHECK(a.graph.edges() == b.graph.edges());
  CHECK(same_embeddings(a.truth, b.truth));
  CHECK(same_embeddings(a.noisy, b.noisy));
  REQUIRE(a.planted.size() == b.planted.size());
  for (const auto& [rel, p] : a.planted) {
    CHECK(p.A == b.planted.at(rel).A);
    CHECK(p.b == b.planted.at(rel).b);
  }

  opt.seed = 10;
  SynthData c = synth_graph(opt);
  CHECK_FALSE(same_embeddings(a.noisy, c.noisy));
}

TEST_CASE("vertex ids are zero padded and classless") {
  SynthOptions opt;
  opt.n = 30;
  opt.d = 2;
  opt.relations = 1;
  SynthData data = synth_graph(opt);

  const auto& vs = data.graph.vertices();
  REQUIRE(vs.size() == 30);
  CHECK(vs.front().id == "v00");
  CHECK(vs.back().id == "v29");
  for (const auto& v : vs) {
    CHECK(v.id.size() == 3);
    CHECK(v.cls.empty());
    CHECK(data.truth.has(v.id));
    CHECK(data.noisy.has(v.id));
  }
}

TEST_CASE("edge counts hit the target mean out-degree exactly") {
  SynthOptions opt;
  opt.n = 25;
  opt.d = 4;
  opt.relations = 2;
  opt.mean_out_degree = 3;
  opt.seed = 3;
  SynthData data = synth_graph(opt);

  std::map<std::string, size_t> per_rel;
  for (const auto& e : data.graph.edges()) per_rel[e.rel]++;
  REQUIRE(per_rel.size() == 2);
  CHECK(per_rel.at("rel0") == 75);
  CHECK(per_rel.at("rel1") == 75);
}

TEST_CASE("planted maps are proper rotations with a fixed shift length") {
  SynthOptions opt;
  opt.n = 20;
  opt.d = 5;
  opt.relations = 3;
  opt.t_scale = 0.7;
  opt.seed = 4;
  SynthData data = synth_graph(opt);

  REQUIRE(data.planted.size() == 3);
  for (const auto& [rel, p] : data.planted) {
    CHECK(p.kind == PenaltyKind::linear);
    REQUIRE(p.A.rows() == 5);
    REQUIRE(p.A.cols() == 5);
    Eigen::MatrixXd gram = p.A.transpose() * p.A;
    CHECK((gram - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() <
          1e-12);
    CHECK(p.A.determinant() == Catch::Approx(1.0).margin(1e-10));
    CHECK(p.b.norm() == Catch::Approx(0.7).margin(1e-12));
  }
}

TEST_CASE("edges join the closest pairs under the planted maps") {
  SynthOptions opt;
  opt.n = 30;
  opt.d = 3;
  opt.relations = 2;
  opt.sigma = 0.0;
  opt.seed = 11;
  SynthData data = synth_graph(opt);

  CHECK(same_embeddings(data.truth, data.noisy));

  auto dist = [&](const std::string& rel, const std::string& src,
                  const std::string& dst) {
    const RelationParams& p = data.planted.at(rel);
    return (p.A * data.truth.at(dst) + p.b - data.truth.at(src)).norm();
  };

  std::set<Edge> present(data.graph.edges().begin(),
                         data.graph.edges().end());
  for (const auto& e : present)
    CHECK(dist(e.rel, e.src, e.dst) <= data.thresholds.at(e.rel) + 1e-12);

  size_t checked = 0;
  for (const auto& a : data.graph.vertices()) {
    for (const auto& b : data.graph.vertices()) {
      if (a.id == b.id) continue;
      for (const auto& rel : {std::string("rel0"), std::string("rel1")}) {
        if (present.count({a.id, rel, b.id})) continue;
        CHECK(dist(rel, a.id, b.id) >= data.thresholds.at(rel) - 1e-12);
        ++checked;
      }
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("truth and noise magnitudes follow the configured scales") {
  SynthOptions opt;
  opt.n = 200;
  opt.d = 10;
  opt.sigma = 0.3;
  opt.seed = 7;
  SynthData data = synth_graph(opt);

  double truth_sq = 0.0, noise_sq = 0.0;
  for (const auto& [id, v] : data.truth.entries()) {
    truth_sq += v.squaredNorm();
    noise_sq += (data.noisy.at(id) - v).squaredNorm();
  }
  truth_sq /= 200.0;
  noise_sq /= 200.0;
  CHECK(truth_sq > 0.8);
  CHECK(truth_sq < 1.2);
  double expected_noise = 10.0 * 0.09;  // d * sigma^2, noise is per component
  CHECK(noise_sq > 0.7 * expected_noise);
  CHECK(noise_sq < 1.3 * expected_noise);
}

TEST_CASE("degenerate options are rejected") {
  SynthOptions opt;
  opt.n = 19;
  CHECK_THROWS_AS(synth_graph(opt), input_error);

  opt = SynthOptions{};
  opt.d = 1;
  CHECK_THROWS_AS(synth_graph(opt), input_error);

  opt = SynthOptions{};
  opt.relations = 0;
  CHECK_THROWS_AS(synth_graph(opt), input_error);

  opt = SynthOptions{};
  opt.sigma = -0.1;
  CHECK_THROWS_AS(synth_graph(opt), input_error);

  opt = SynthOptions{};
  opt.n = 20;
  opt.mean_out_degree = 20;
  CHECK_THROWS_AS(synth_graph(opt), input_error);
}
