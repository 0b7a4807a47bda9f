#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "kgretro/sgd.hpp"
#include "test_util.hpp"

using namespace kgretro;
using Catch::Matchers::ContainsSubstring;
using testutil::TempDir;

namespace {

EmbeddingSet random_emb(const KnowledgeGraph& g, Eigen::Index d,
                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  EmbeddingSet q;
  for (const auto& v : g.vertices()) {
    Eigen::VectorXd x(d);
    for (Eigen::Index i = 0; i < d; ++i) x[i] = gauss(rng);
    q.insert(v.id, x);
  }
  return q;
}

RetrofitConfig neural_cfg() {
  RetrofitConfig cfg;
  cfg.kind = PenaltyKind::neural;
  cfg.beta_neg = 1.0;
  return cfg;
}

std::string serialized(const RetrofitResult& res, TempDir& tmp,
                       const std::string& tag) {
  save_embeddings(res.embeddings, tmp.file(tag + ".emb").string(),
                  EmbFormat::word2vec);
  save_params(res.params, tmp.file(tag + ".par").string());
  return testutil::read_file(tmp.file(tag + ".emb")) +
         testutil::read_file(tmp.file(tag + ".par"));
}

}  // namespace

TEST_CASE("zero epochs returns the anchors and the seeded init") {
  auto g = testutil::random_graph(12, 1, 15, 3);
  auto q_hat = random_emb(g, 4, 4);
  auto cfg = neural_cfg();
  cfg.sgd.epochs = 0;
  auto res = retrofit_sgd(g, q_hat, cfg);

  CHECK(res.sweeps_run == 0);
  CHECK_FALSE(res.converged);
  REQUIRE(res.trace.size() == 1);
  for (const auto& [id, v] : q_hat.entries())
    CHECK(res.embeddings.at(id) == v);

  const auto& A = res.params.at("rel0").A;
  Eigen::MatrixXd noise = A - Eigen::MatrixXd::Identity(4, 4);
  CHECK(noise.lpNorm<Eigen::Infinity>() <= 0.01);
  CHECK(noise.lpNorm<Eigen::Infinity>() > 0.0);

  auto again = retrofit_sgd(g, q_hat, cfg);
  CHECK(again.params.at("rel0").A == A);
}

TEST_CASE("zero learning rate leaves the trace constant to the last bit") {
  auto g = testutil::random_graph(15, 2, 20, 7);
  auto q_hat = random_emb(g, 3, 8);
  auto cfg = neural_cfg();
  cfg.sgd.learning_rate = 0.0;
  cfg.sgd.epochs = 10;
  auto res = retrofit_sgd(g, q_hat, cfg);
  REQUIRE(res.trace.size() == 11);
  for (const auto& ob : res.trace) {
    CHECK(ob.total == res.trace.front().total);
    CHECK(ob.positive == res.trace.front().positive);
    CHECK(ob.negative == res.trace.front().negative);
  }
  for (const auto& [id, v] : q_hat.entries())
    CHECK(res.embeddings.at(id) == v);
}

TEST_CASE("fifty epochs cut the objective by at least ten percent") {
  auto g = testutil::random_graph(20, 1, 30, 5);
  auto q_hat = random_emb(g, 5, 6);
  auto cfg = neural_cfg();
  cfg.seed = 5;
  cfg.sgd.learning_rate = 0.01;
  cfg.sgd.epochs = 50;
  auto res = retrofit_sgd(g, q_hat, cfg);
  REQUIRE(res.trace.size() == 51);
  double first = res.trace[1].total;
  double last = res.trace.back().total;
  INFO("epoch 1 " << first << " final " << last);
  CHECK(first - last >= 0.10 * std::abs(first));
  CHECK(res.embeddings.size() == g.vertices().size());
}

TEST_CASE("sgd runs are reproducible and seed-sensitive") {
  auto g = testutil::random_graph(10, 1, 14, 21);
  auto q_hat = random_emb(g, 3, 22);
  auto cfg = neural_cfg();
  cfg.sgd.epochs = 5;
  TempDir tmp("sgd");
  auto a = serialized(retrofit_sgd(g, q_hat, cfg), tmp, "a");
  auto b = serialized(retrofit_sgd(g, q_hat, cfg), tmp, "b");
  CHECK(a == b);
  cfg.seed = 99;
  CHECK(serialized(retrofit_sgd(g, q_hat, cfg), tmp, "c") != a);
}

TEST_CASE("sgd accepts rectangular relations") {
  std::vector<Vertex> verts;
  std::vector<Edge> edges;
  EmbeddingSet q;
  std::mt19937_64 rng(31);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int k = 0; k < 8; ++k) {
    std::string s = "s" + std::to_string(k), t = "t" + std::to_string(k);
    verts.push_back({s, "u"});
    verts.push_back({t, "w"});
    edges.push_back({s, "R", t});
    Eigen::VectorXd a(3), b(2);
    for (int i = 0; i < 3; ++i) a[i] = gauss(rng);
    for (int i = 0; i < 2; ++i) b[i] = gauss(rng);
    q.insert(s, a);
    q.insert(t, b);
  }
  KnowledgeGraph g(verts, edges);
  auto cfg = neural_cfg();
  cfg.sgd.epochs = 3;
  auto res = retrofit_sgd(g, q, cfg);
  CHECK(res.params.at("R").A.rows() == 3);
  CHECK(res.params.at("R").A.cols() == 2);
  CHECK(res.trace.size() == 4);
}

TEST_CASE("sgd rejects closed-form kinds") {
  auto g = testutil::random_graph(8, 2, 10, 41);
  auto q_hat = random_emb(g, 3, 42);
  RetrofitConfig cfg;
  cfg.kind = PenaltyKind::identity;
  CHECK_THROWS_WITH(retrofit_sgd(g, q_hat, cfg),
                    ContainsSubstring("closed-form"));

  auto mixed = neural_cfg();
  mixed.kind_by_relation["rel1"] = PenaltyKind::linear;
  CHECK_THROWS_WITH(retrofit_sgd(g, q_hat, mixed),
                    ContainsSubstring("closed-form"));
}

TEST_CASE("runaway steps abort with an epoch and batch diagnostic") {
  auto g = testutil::random_graph(20, 1, 30, 5);
  auto q_hat = random_emb(g, 5, 6);
  auto cfg = neural_cfg();
  cfg.sgd.learning_rate = 1e30;
  cfg.sgd.epochs = 10;
  CHECK_THROWS_MATCHES(
      retrofit_sgd(g, q_hat, cfg), numeric_error,
      Catch::Matchers::MessageMatches(ContainsSubstring("epoch")));
}
