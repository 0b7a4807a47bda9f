#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "kgretro/eval.hpp"
#include "kgretro/synthetic.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace kgretro;
using namespace testutil;
using Catch::Matchers::ContainsSubstring;

namespace {

std::map<std::string, size_t> per_source(const std::vector<Edge>& edges) {
  std::map<std::string, size_t> counts;
  for (const auto& e : edges) counts[e.src]++;
  return counts;
}

// A split whose features carry an obvious sign signal in the target slot.
LinkPredSplit separable_split(EmbeddingSet& q) {
  LinkPredSplit s;
  s.relation = "R";
  for (int k = 0; k < 10; ++k) {
    std::string p = "p" + std::to_string(k);
    std::string good = "g" + std::to_string(k);
    std::string bad = "b" + std::to_string(k);
    q.insert(p, Eigen::Vector2d(1.0, 0.0));
    q.insert(good, Eigen::Vector2d(0.8 + 0.01 * k, 1.0));
    q.insert(bad, Eigen::Vector2d(-0.8 - 0.01 * k, -1.0));
    auto& pos = k < 7 ? s.train_pos : s.test_pos;
    auto& neg = k < 7 ? s.train_neg : s.test_neg;
    pos.push_back({p, "R", good});
    neg.push_back({p, "R", bad});
    (k < 7 ? s.train_vertices : s.test_vertices).insert(p);
  }
  return s;
}

// Pos/neg labels assigned independently of the (random) embeddings.
LinkPredSplit noise_split(EmbeddingSet& q, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto add = [&](const std::string& id) {
    Eigen::VectorXd v(4);
    for (int k = 0; k < 4; ++k) v[k] = gauss(rng);
    q.insert(id, v);
  };
  LinkPredSplit s;
  s.relation = "R";
  for (int side = 0; side < 2; ++side) {
    for (int k = 0; k < 100; ++k) {
      std::string tag = (side == 0 ? "tr" : "te") + std::to_string(k);
      add("s" + tag);
      add("p" + tag);
      add("n" + tag);
      auto& pos = side == 0 ? s.train_pos : s.test_pos;
      auto& neg = side == 0 ? s.train_neg : s.test_neg;
      pos.push_back({"s" + tag, "R", "p" + tag});
      neg.push_back({"s" + tag, "R", "n" + tag});
      (side == 0 ? s.train_vertices : s.test_vertices).insert("s" + tag);
    }
  }
  return s;
}

}  // namespace

TEST_CASE("linkpred split balances vertices, edges, and negatives") {
  KnowledgeGraph g = random_graph(20, 2, 30, 17);
  LinkPredSplit s = make_linkpred_split(g, "rel0", NegStrategy::same_source, 5);

  CHECK(s.relation == "rel0");
  CHECK(s.train_vertices.size() == 14);
  CHECK(s.test_vertices.size() == 6);
  for (const auto& v : s.train_vertices) CHECK_FALSE(s.test_vertices.count(v));

  size_t rel_edges = 0;
  for (const auto& e : g.edges())
    if (e.rel == "rel0") ++rel_edges;
  CHECK(s.train_pos.size() + s.test_pos.size() == rel_edges);
  CHECK(s.train_neg.size() == s.train_pos.size());
  CHECK(s.test_neg.size() == s.test_pos.size());

  CHECK(per_source(s.train_pos) == per_source(s.train_neg));
  CHECK(per_source(s.test_pos) == per_source(s.test_neg));

  std::set<Edge> seen;
  for (const auto* list :
       {&s.train_pos, &s.test_pos, &s.train_neg, &s.test_neg}) {
    for (const auto& e : *list) {
      CHECK(e.rel == "rel0");
      CHECK(seen.insert(e).second);
    }
  }
  for (const auto& e : s.train_pos) CHECK(s.train_vertices.count(e.src));
  for (const auto& e : s.train_neg) CHECK(s.train_vertices.count(e.src));
  for (const auto& e : s.test_pos) CHECK(s.test_vertices.count(e.src));
  for (const auto& e : s.test_neg) CHECK(s.test_vertices.count(e.src));
  for (const auto& e : s.train_neg) CHECK_FALSE(g.has_edge(e.src, e.rel, e.dst));
  for (const auto& e : s.test_neg) CHECK_FALSE(g.has_edge(e.src, e.rel, e.dst));
}

TEST_CASE("linkpred split is deterministic in the seed") {
  KnowledgeGraph g = random_graph(25, 1, 40, 2);
  LinkPredSplit a = make_linkpred_split(g, "rel0", NegStrategy::same_source, 7);
  LinkPredSplit b = make_linkpred_split(g, "rel0", NegStrategy::same_source, 7);
  CHECK(a.train_pos == b.train_pos);
  CHECK(a.test_pos == b.test_pos);
  CHECK(a.train_neg == b.train_neg);
  CHECK(a.test_neg == b.test_neg);
  CHECK(a.train_vertices == b.train_vertices);

  LinkPredSplit c = make_linkpred_split(g, "rel0", NegStrategy::same_source, 8);
  CHECK((a.train_vertices != c.train_vertices || a.train_neg != c.train_neg));
}

TEST_CASE("a relation the size of a real inheritance table splits 70/30") {
  std::vector<Vertex> vs;
  for (int i = 0; i < 600; ++i) vs.push_back({"n" + std::to_string(i), ""});
  std::mt19937_64 rng(99);
  std::set<std::pair<int, int>> used;
  std::vector<Edge> edges;
  while (edges.size() < 1562) {
    int a = static_cast<int>(rng() % 600), b = static_cast<int>(rng() % 600);
    if (a == b || !used.insert({a, b}).second) continue;
    edges.push_back(
        {"n" + std::to_string(a), "isa", "n" + std::to_string(b)});
  }
  KnowledgeGraph g(std::move(vs), std::move(edges));
  LinkPredSplit s = make_linkpred_split(g, "isa", NegStrategy::same_source, 1);

  const size_t train = s.train_pos.size() + s.train_neg.size();
  const size_t test = s.test_pos.size() + s.test_neg.size();
  CHECK(train + test == 2 * 1562);
  CHECK(train > test);
  CHECK(train >= 1900);
  CHECK(train <= 2500);
  CHECK(per_source(s.train_pos) == per_source(s.train_neg));
  CHECK(per_source(s.test_pos) == per_source(s.test_neg));
}

TEST_CASE("splits reject tiny relations and saturated sources") {
  {
    std::vector<Vertex> vs;
    for (int i = 0; i < 12; ++i) vs.push_back({"v" + std::to_string(i), ""});
    std::vector<Edge> edges;
    for (int i = 1; i < 10; ++i)
      edges.push_back({"v0", "R", "v" + std::to_string(i)});
    KnowledgeGraph g(std::move(vs), std::move(edges));
    CHECK_THROWS_WITH(make_linkpred_split(g, "R", NegStrategy::same_source, 1),
                      ContainsSubstring("10"));
  }
  {
    std::vector<Vertex> vs;
    for (int i = 0; i < 12; ++i) vs.push_back({"v" + std::to_string(i), ""});
    std::vector<Edge> edges;
    for (int i = 1; i < 12; ++i)
      edges.push_back({"v0", "R", "v" + std::to_string(i)});
    for (int i = 2; i < 5; ++i)
      edges.push_back({"v1", "R", "v" + std::to_string(i)});
    KnowledgeGraph g(std::move(vs), std::move(edges));
    CHECK_THROWS_WITH(make_linkpred_split(g, "R", NegStrategy::same_source, 1),
                      ContainsSubstring("v0"));
  }
}

TEST_CASE("pair features concatenate source then target") {
  EmbeddingSet q;
  q.insert("i", Eigen::Vector2d(1.0, 0.0));
  q.insert("j", Eigen::Vector2d(0.0, 2.0));
  Eigen::VectorXd f = pair_features(q, {"i", "R", "j"});
  REQUIRE(f.size() == 4);
  CHECK(f[0] == 1.0);
  CHECK(f[1] == 0.0);
  CHECK(f[2] == 0.0);
  CHECK(f[3] == 2.0);

  Eigen::VectorXd rev = pair_features(q, {"j", "R", "i"});
  CHECK(f != rev);

  EmbeddingSet mixed;
  mixed.insert("a", Eigen::Vector3d(1.0, 2.0, 3.0));
  mixed.insert("b", Eigen::Vector2d(4.0, 5.0));
  CHECK(pair_features(mixed, {"a", "R", "b"}).size() == 5);

  CHECK_THROWS_AS(pair_features(q, {"i", "R", "missing"}), input_error);
}

TEST_CASE("classifier nails linearly separable pairs") {
  EmbeddingSet q;
  LinkPredSplit s = separable_split(q);
  LinkClassifier clf = train_link_classifier(s, q);
  CHECK(accuracy(clf, q, s.test_pos, s.test_neg) == 1.0);
  CHECK(accuracy(clf, q, s.train_pos, s.train_neg) == 1.0);
}

TEST_CASE("classifier stays near chance when labels carry no signal") {
  for (uint64_t seed : {11ULL, 12ULL, 13ULL}) {
    EmbeddingSet q;
    LinkPredSplit s = noise_split(q, seed);
    LinkClassifier clf = train_link_classifier(s, q);
    double acc = accuracy(clf, q, s.test_pos, s.test_neg);
    INFO("seed " << seed << " accuracy " << acc);
    CHECK(acc >= 0.4);
    CHECK(acc <= 0.6);
  }
}

TEST_CASE("classifier refuses single-class training data") {
  EmbeddingSet q;
  LinkPredSplit s = separable_split(q);
  s.train_neg.clear();
  CHECK_THROWS_WITH(train_link_classifier(s, q), ContainsSubstring("class"));
}

TEST_CASE("spearman matches a brute-force oracle on tied data") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 20; ++t) {
    const size_t n = 5 + rng() % 36;
    std::vector<double> x(n), y(n);
    do {
      for (auto& v : x) v = static_cast<double>(rng() % 10);
    } while (std::set<double>(x.begin(), x.end()).size() < 2);
    do {
      for (auto& v : y) v = static_cast<double>(rng() % 10);
    } while (std::set<double>(y.begin(), y.end()).size() < 2);
    double got = spearman(x, y);
    double want = oracle::brute_spearman(x, y);
    CHECK(std::abs(got - want) <= 1e-12);
    CHECK(got >= -1.0);
    CHECK(got <= 1.0);
  }
  CHECK_THROWS_AS(spearman({1.0, 1.0, 1.0}, {1.0, 2.0, 3.0}), input_error);
}

TEST_CASE("word similarity tracks perfect and reversed agreement") {
  EmbeddingSet q;
  q.insert("base", Eigen::Vector2d(1.0, 0.0));
  for (int k = 1; k <= 8; ++k)
    q.insert("w" + std::to_string(k),
             Eigen::Vector2d(std::cos(0.1 * k), std::sin(0.1 * k)));

  std::vector<WordsimPair> data;
  for (int k = 1; k <= 8; ++k)
    data.push_back({"base", "w" + std::to_string(k), 9.0 - k});

  EvalReport r = word_similarity(q, data);
  CHECK(r.value == Catch::Approx(1.0).margin(1e-12));
  CHECK(r.n_test == 8);
  CHECK(r.n_dropped == 0);

  for (auto& p : data) p.score = -p.score;
  EvalReport rev = word_similarity(q, data);
  CHECK(rev.value == Catch::Approx(-1.0).margin(1e-12));
}

TEST_CASE("word similarity drops unusable pairs and counts them") {
  EmbeddingSet q;
  q.insert("a", Eigen::Vector2d(1.0, 0.0));
  q.insert("b", Eigen::Vector2d(0.9, 0.1));
  q.insert("c", Eigen::Vector2d(0.0, 1.0));
  q.insert("zero", Eigen::Vector2d(0.0, 0.0));

  std::vector<WordsimPair> core = {{"a", "b", 5.0}, {"a", "c", 1.0},
                                   {"b", "c", 2.0}};
  EvalReport base = word_similarity(q, core);

  std::vector<WordsimPair> extra = core;
  extra.push_back({"a", "ghost", 3.0});
  extra.push_back({"zero", "b", 4.0});
  EvalReport padded = word_similarity(q, extra);
  CHECK(padded.n_test == 3);
  CHECK(padded.n_dropped == 2);
  CHECK(padded.value == base.value);

  std::vector<WordsimPair> starved = {{"a", "b", 5.0}, {"a", "ghost", 3.0}};
  CHECK_THROWS_WITH(word_similarity(q, starved), ContainsSubstring("2"));
}

TEST_CASE("analogy scoring follows the vector offset rule") {
  EmbeddingSet q;
  q.insert("a", Eigen::Vector2d(1.0, 0.0));
  q.insert("b", Eigen::Vector2d(0.0, 1.0));
  q.insert("c", Eigen::Vector2d(1.0, 1.0));
  q.insert("exact", Eigen::Vector2d(0.0, 2.0));
  q.insert("ortho", Eigen::Vector2d(3.0, 0.0));
  q.insert("null", Eigen::Vector2d(0.0, 0.0));

  EvalReport one = analogy_eval(q, {{"a", "b", "c", "exact"}});
  CHECK(one.value == Catch::Approx(1.0).margin(1e-12));
  CHECK(one.n_test == 1);

  EvalReport zero = analogy_eval(q, {{"a", "b", "c", "ortho"}});
  CHECK(zero.value == Catch::Approx(0.0).margin(1e-12));

  EvalReport both =
      analogy_eval(q, {{"a", "b", "c", "exact"}, {"a", "b", "c", "ortho"}});
  CHECK(both.value == Catch::Approx(0.5).margin(1e-12));

  EvalReport dropped = analogy_eval(
      q, {{"a", "b", "c", "exact"}, {"a", "b", "c", "null"},
          {"a", "b", "c", "ghost"}});
  CHECK(dropped.n_test == 1);
  CHECK(dropped.n_dropped == 2);
  CHECK(dropped.value == Catch::Approx(1.0).margin(1e-12));

  CHECK_THROWS_AS(analogy_eval(q, {{"a", "b", "c", "null"}}), input_error);
}

TEST_CASE("lexical dataset loaders parse and reject cleanly") {
  TempDir tmp("eval_loaders");
  write_file(tmp.file("ws.tsv"), "cat\tdog\t7.5\ncar\ttruck\t8.25\n");
  auto pairs = load_wordsim(tmp.file("ws.tsv"));
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].w1 == "cat");
  CHECK(pairs[0].score == 7.5);
  CHECK(pairs[1].w2 == "truck");

  write_file(tmp.file("bad.tsv"), "cat\tdog\t7.5\njust two\n");
  CHECK_THROWS_WITH(load_wordsim(tmp.file("bad.tsv")),
                    ContainsSubstring("line 2"));
  write_file(tmp.file("nan.tsv"), "cat\tdog\tmany\n");
  CHECK_THROWS_AS(load_wordsim(tmp.file("nan.tsv")), input_error);

  write_file(tmp.file("an.txt"),
             ": capital-common\nathens greece baghdad iraq\n"
             ": family\nboy girl king queen\n");
  auto quads = load_analogies(tmp.file("an.txt"));
  REQUIRE(quads.size() == 2);
  CHECK(quads[0].a == "athens");
  CHECK(quads[1].d == "queen");

  write_file(tmp.file("short.txt"), "only three words\n");
  CHECK_THROWS_WITH(load_analogies(tmp.file("short.txt")),
                    ContainsSubstring("line 1"));
}

TEST_CASE("repeat_eval reports mean and sample deviation over seeds") {
  auto task = [](uint64_t seed) {
    return 0.8 + 0.1 * static_cast<double>(seed - 100);
  };
  RepeatStats stats = repeat_eval(task, 3, 100);
  REQUIRE(stats.values.size() == 3);
  CHECK(stats.seeds == std::vector<uint64_t>{100, 101, 102});
  CHECK(stats.mean == Catch::Approx(0.9).margin(1e-15));
  CHECK(stats.stddev == Catch::Approx(0.1).margin(1e-12));

  RepeatStats solo = repeat_eval(task, 1, 100);
  CHECK(solo.stddev == 0.0);
  CHECK(solo.mean == task(100));

  RepeatStats wide = repeat_eval(task, 5, 100, 4);
  RepeatStats narrow = repeat_eval(task, 5, 100, 1);
  CHECK(wide.values == narrow.values);

  CHECK_THROWS_AS(repeat_eval(task, 0, 1), input_error);
}

TEST_CASE("retrofitting a planted graph lifts link prediction accuracy") {
  SynthOptions so;
  so.n = 200;
  so.d = 8;
  so.relations = 3;
  so.sigma = 0.3;
  so.seed = 5;
  SynthData data = synth_graph(so);

  RetrofitConfig cfg;
  cfg.kind = PenaltyKind::linear;
  cfg.alpha = 1.0;
  cfg.beta_pos = 1.0;
  cfg.lambda = 1e-3;
  cfg.max_sweeps = 30;
  cfg.tol = 1e-7;

  ClassifierHyper hyper;
  hyper.interactions = true;
  double raw = linkpred_protocol(data.graph, data.noisy, "rel0", std::nullopt,
                                 cfg, hyper, 1);
  double lin = linkpred_protocol(data.graph, data.noisy, "rel0",
                                 PenaltyKind::linear, cfg, hyper, 1);
  INFO("raw " << raw << " linear " << lin);
  CHECK(lin >= raw + 0.10);

  double raw_again = linkpred_protocol(data.graph, data.noisy, "rel0",
                                       std::nullopt, cfg, hyper, 1);
  CHECK(raw == raw_again);
}
