#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kgretro/common.hpp"
#include "kgretro/embeddings.hpp"
#include "kgretro/engine.hpp"
#include "kgretro/graph.hpp"
#include "kgretro/sampling.hpp"
#include "kgretro/sgd.hpp"

namespace kgretro {

struct LinkPredSplit {
  std::string relation;
  std::vector<Edge> train_pos, test_pos, train_neg, test_neg;
  std::set<std::string> train_vertices, test_vertices;
  uint64_t seed = 0;
};

// Vertex-level 70/30 split: an edge belongs to the side its source vertex
// landed on, and so does its sampled negative, which keeps both sides
// balanced per source.
inline LinkPredSplit make_linkpred_split(const KnowledgeGraph& g,
                                         const std::string& rel,
                                         NegStrategy strategy, uint64_t seed) {
  std::vector<Edge> pos;
  for (const auto& e : g.edges())
    if (e.rel == rel) pos.push_back(e);
  if (pos.size() < 10) {
    auto rels = g.relations();
    if (std::find(rels.begin(), rels.end(), rel) == rels.end())
      throw input_error("relation '" + rel + "' not in graph");
    throw input_error("relation '" + rel + "' has " +
                      std::to_string(pos.size()) +
                      " edges; link prediction needs at least 10");
  }

  NegativeEdgeSet neg =
      sample_negative_edges(g, {rel}, mix_seed(seed, 0x6e6567ULL), strategy);
  if (neg.skipped > 0) {
    std::string who;
    for (const auto& s : neg.skipped_sources)
      who += (who.empty() ? "" : ", ") + s;
    throw input_error("relation '" + rel +
                      "' cannot be balanced; sources with no legal negative "
                      "target: " +
                      who);
  }

  std::vector<std::string> ids;
  for (const auto& v : g.vertices()) ids.push_back(v.id);
  std::mt19937_64 rng(mix_seed(seed, 0x73706c69ULL));
  std::shuffle(ids.begin(), ids.end(), rng);
  const size_t n_train =
      static_cast<size_t>(std::llround(0.7 * static_cast<double>(ids.size())));

  LinkPredSplit split;
  split.relation = rel;
  split.seed = seed;
  for (size_t i = 0; i < ids.size(); ++i)
    (i < n_train ? split.train_vertices : split.test_vertices)
        .insert(ids[i]);
  for (const auto& e : pos)
    (split.train_vertices.count(e.src) ? split.train_pos : split.test_pos)
        .push_back(e);
  for (const auto& e : neg.edges)
    (split.train_vertices.count(e.src) ? split.train_neg : split.test_neg)
        .push_back(e);
  return split;
}

inline Eigen::VectorXd pair_features(const EmbeddingSet& q, const Edge& e) {
  const Eigen::VectorXd& src = q.at(e.src);
  const Eigen::VectorXd& dst = q.at(e.dst);
  Eigen::VectorXd f(src.size() + dst.size());
  f << src, dst;
  return f;
}

struct ClassifierHyper {
  double l2 = 1e-3;
  double tol = 1e-8;
  int max_iters = 50000;
  // Append squared and src*dst cross terms to the pair features. Off by
  // default; the plain model is linear in the concatenated embeddings.
  bool interactions = false;
};

struct LinkClassifier {
  Eigen::VectorXd w;
  double bias = 0.0;
  bool interactions = false;
  Eigen::Index d_src = 0;
};

namespace detail {

// Degree-2 expansion tailored to affine relation penalties: squares carry
// vector norms, cross terms carry every q_src^T M q_dst form.
inline Eigen::VectorXd expand_pair(const Eigen::VectorXd& x,
                                   Eigen::Index d_src) {
  const Eigen::Index d_dst = x.size() - d_src;
  Eigen::VectorXd out(x.size() + d_src + d_dst + d_src * d_dst);
  out.head(x.size()) = x;
  Eigen::Index at = x.size();
  out.segment(at, d_src) = x.head(d_src).cwiseProduct(x.head(d_src));
  at += d_src;
  out.segment(at, d_dst) = x.tail(d_dst).cwiseProduct(x.tail(d_dst));
  at += d_dst;
  for (Eigen::Index i = 0; i < d_src; ++i)
    for (Eigen::Index j = 0; j < d_dst; ++j)
      out[at++] = x[i] * x[d_src + j];
  return out;
}

}  // namespace detail

// l2-regularized logistic regression on pair features, fit by accelerated
// gradient descent from a zero start. Deterministic: fixed step from the
// exact Lipschitz bound, constant momentum from the strong convexity of the
// ridge term.
inline LinkClassifier train_link_classifier(const LinkPredSplit& split,
                                            const EmbeddingSet& q,
                                            const ClassifierHyper& hyper = {}) {
  if (split.train_pos.empty() || split.train_neg.empty())
    throw input_error(
        "training data has a single class; the split is degenerate");
  if (hyper.l2 < 0.0 || hyper.tol <= 0.0 || hyper.max_iters < 1)
    throw input_error("bad classifier hyperparameters");

  const size_t m = split.train_pos.size() + split.train_neg.size();
  const Eigen::Index d_src = q.at(split.train_pos.front().src).size();
  auto features = [&](const Edge& e) {
    Eigen::VectorXd f = pair_features(q, e);
    return hyper.interactions ? detail::expand_pair(f, d_src) : f;
  };
  Eigen::VectorXd first = features(split.train_pos.front());
  Eigen::MatrixXd X(m, first.size());
  Eigen::VectorXd y(m);
  size_t row = 0;
  for (const auto& e : split.train_pos) {
    Eigen::VectorXd f = features(e);
    if (f.size() != X.cols())
      throw input_error("pair feature length varies across edges");
    X.row(row) = f.transpose();
    y[row++] = 1.0;
  }
  for (const auto& e : split.train_neg) {
    Eigen::VectorXd f = features(e);
    if (f.size() != X.cols())
      throw input_error("pair feature length varies across edges");
    X.row(row) = f.transpose();
    y[row++] = 0.0;
  }

  // Standardize columns for conditioning; the fitted weights are mapped
  // back to raw feature space below, so the model itself is unchanged.
  Eigen::RowVectorXd mean = X.colwise().mean();
  Eigen::RowVectorXd scale =
      ((X.rowwise() - mean).colwise().squaredNorm() / static_cast<double>(m))
          .cwiseSqrt();
  for (Eigen::Index c = 0; c < scale.size(); ++c)
    if (scale[c] == 0.0) scale[c] = 1.0;
  X = (X.rowwise() - mean).array().rowwise() / scale.array();

  const double md = static_cast<double>(m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(X.transpose() * X);
  const double lip =
      eig.eigenvalues().maxCoeff() / (4.0 * md) + hyper.l2 + 1.0 / (4.0 * md);
  const double step = 1.0 / lip;
  const double mu = hyper.l2;
  const double momentum =
      mu > 0.0 ? (std::sqrt(lip) - std::sqrt(mu)) / (std::sqrt(lip) +
                                                     std::sqrt(mu))
               : 0.0;

  Eigen::VectorXd w = Eigen::VectorXd::Zero(X.cols());
  Eigen::VectorXd w_prev = w;
  double b = 0.0, b_prev = 0.0;
  auto gradient = [&](const Eigen::VectorXd& wv, double bv,
                      Eigen::VectorXd& gw, double& gb) {
    Eigen::VectorXd p =
        ((-(X * wv).array() - bv).exp() + 1.0).inverse().matrix();
    gw = X.transpose() * (p - y) / md + hyper.l2 * wv;
    gb = (p - y).sum() / md;
  };

  Eigen::VectorXd gw(X.cols());
  double gb = 0.0;
  for (int it = 0; it < hyper.max_iters; ++it) {
    Eigen::VectorXd look = w + momentum * (w - w_prev);
    double look_b = b + momentum * (b - b_prev);
    gradient(look, look_b, gw, gb);
    w_prev = w;
    b_prev = b;
    w = look - step * gw;
    b = look_b - step * gb;
    gradient(w, b, gw, gb);
    if (std::max(gw.cwiseAbs().maxCoeff(), std::abs(gb)) <= hyper.tol) break;
  }
  Eigen::VectorXd w_raw = (w.transpose().array() / scale.array()).transpose();
  double b_raw = b - (mean.array() / scale.array() * w.transpose().array()).sum();
  return LinkClassifier{std::move(w_raw), b_raw, hyper.interactions, d_src};
}

inline double decision_value(const LinkClassifier& clf,
                             const Eigen::VectorXd& features) {
  if (clf.interactions)
    return clf.w.dot(detail::expand_pair(features, clf.d_src)) + clf.bias;
  return clf.w.dot(features) + clf.bias;
}

inline double predict_prob(const LinkClassifier& clf,
                           const Eigen::VectorXd& features) {
  return 1.0 / (1.0 + std::exp(-decision_value(clf, features)));
}

// Fraction of edges labeled correctly; the decision rule maps a probability
// of exactly one half to the negative class, so the zero classifier scores
// 0.5 on balanced data.
inline double accuracy(const LinkClassifier& clf, const EmbeddingSet& q,
                       const std::vector<Edge>& pos,
                       const std::vector<Edge>& neg) {
  if (pos.empty() && neg.empty())
    throw input_error("no test edges to score");
  size_t correct = 0;
  for (const auto& e : pos)
    if (decision_value(clf, pair_features(q, e)) > 0.0) ++correct;
  for (const auto& e : neg)
    if (decision_value(clf, pair_features(q, e)) <= 0.0) ++correct;
  return static_cast<double>(correct) /
         static_cast<double>(pos.size() + neg.size());
}

namespace detail {

inline std::vector<double> average_ranks(const std::vector<double>& x) {
  const size_t n = x.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && x[order[j]] == x[order[i]]) ++j;
    const double rank = static_cast<double>(i + j + 1) / 2.0;
    for (size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

}  // namespace detail

// Tie-aware Spearman correlation: Pearson on average ranks.
inline double spearman(const std::vector<double>& x,
                       const std::vector<double>& y) {
  if (x.size() != y.size())
    throw input_error("rank correlation needs paired samples");
  if (x.size() < 2)
    throw input_error("rank correlation needs at least 2 samples");
  std::vector<double> rx = detail::average_ranks(x);
  std::vector<double> ry = detail::average_ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0)
    throw input_error("rank correlation is undefined for constant input");
  return sxy / std::sqrt(sxx * syy);
}

inline double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.dot(b) / std::sqrt(a.squaredNorm() * b.squaredNorm());
}

struct EvalReport {
  std::string metric;
  double value = 0.0;
  double dispersion = 0.0;
  size_t n_train = 0;
  size_t n_test = 0;
  size_t n_dropped = 0;
  std::vector<uint64_t> seeds;
};

inline void save_report(const EvalReport& r, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot write '" + path + "'");
  out << "metric=" << r.metric << '\n';
  out << "value=" << fmt_g17(r.value) << '\n';
  out << "dispersion=" << fmt_g17(r.dispersion) << '\n';
  out << "n_train=" << r.n_train << '\n';
  out << "n_test=" << r.n_test << '\n';
  out << "n_dropped=" << r.n_dropped << '\n';
  out << "seeds=";
  for (size_t i = 0; i < r.seeds.size(); ++i)
    out << (i ? "," : "") << r.seeds[i];
  out << '\n';
}

struct WordsimPair {
  std::string w1, w2;
  double score = 0.0;
};

inline std::vector<WordsimPair> load_wordsim(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open '" + path + "'");
  std::vector<WordsimPair> pairs;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() != 3)
      throw input_error(path + " line " + std::to_string(lineno) +
                        ": expected word<TAB>word<TAB>score");
    pairs.push_back({std::string(fields[0]), std::string(fields[1]),
                     parse_double(fields[2],
                                  path + " line " + std::to_string(lineno))});
  }
  return pairs;
}

// Spearman correlation between embedding cosines and human scores. Pairs
// with a missing word or a zero-norm vector are dropped and counted.
inline EvalReport word_similarity(const EmbeddingSet& q,
                                  const std::vector<WordsimPair>& data) {
  std::vector<double> sims, human;
  size_t dropped = 0;
  for (const auto& p : data) {
    if (!q.has(p.w1) || !q.has(p.w2) || q.at(p.w1).squaredNorm() == 0.0 ||
        q.at(p.w2).squaredNorm() == 0.0) {
      ++dropped;
      continue;
    }
    sims.push_back(cosine(q.at(p.w1), q.at(p.w2)));
    human.push_back(p.score);
  }
  if (sims.size() < 2)
    throw input_error("only " + std::to_string(sims.size()) +
                      " usable pairs after dropping " +
                      std::to_string(dropped) + "; need at least 2");
  EvalReport r;
  r.metric = "spearman";
  r.value = spearman(sims, human);
  r.n_test = sims.size();
  r.n_dropped = dropped;
  return r;
}

struct AnalogyQuad {
  std::string a, b, c, d;
};

inline std::vector<AnalogyQuad> load_analogies(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open '" + path + "'");
  std::vector<AnalogyQuad> quads;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == ':') continue;
    std::istringstream row(line);
    std::vector<std::string> words;
    std::string w;
    while (row >> w) words.push_back(w);
    if (words.size() != 4)
      throw input_error(path + " line " + std::to_string(lineno) +
                        ": expected 4 words per analogy");
    quads.push_back({words[0], words[1], words[2], words[3]});
  }
  return quads;
}

// Mean cosine between the held-out word and the vector-offset prediction
// q_b - q_a + q_c. Quadruples with missing words or zero-norm operands are
// dropped and counted.
inline EvalReport analogy_eval(const EmbeddingSet& q,
                               const std::vector<AnalogyQuad>& data) {
  double sum = 0.0;
  size_t used = 0, dropped = 0;
  for (const auto& quad : data) {
    if (!q.has(quad.a) || !q.has(quad.b) || !q.has(quad.c) ||
        !q.has(quad.d)) {
      ++dropped;
      continue;
    }
    Eigen::VectorXd pred = q.at(quad.b) - q.at(quad.a) + q.at(quad.c);
    if (pred.squaredNorm() == 0.0 || q.at(quad.d).squaredNorm() == 0.0) {
      ++dropped;
      continue;
    }
    sum += cosine(q.at(quad.d), pred);
    ++used;
  }
  if (used == 0)
    throw input_error("no usable analogy quadruples (dropped " +
                      std::to_string(dropped) + ")");
  EvalReport r;
  r.metric = "analogy";
  r.value = sum / static_cast<double>(used);
  r.n_test = used;
  r.n_dropped = dropped;
  return r;
}

struct RepeatStats {
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<double> values;
  std::vector<uint64_t> seeds;
};

// Runs task(base_seed + i) for i in [0, repeats) and reports the mean and
// sample standard deviation. The task must be thread safe when threads > 1;
// results land in fixed slots, so the output does not depend on the thread
// count.
inline RepeatStats repeat_eval(const std::function<double(uint64_t)>& task,
                               int repeats, uint64_t base_seed,
                               int threads = 1) {
  if (repeats < 1) throw input_error("repeats must be positive");
  RepeatStats stats;
  stats.values.resize(repeats);
  stats.seeds.resize(repeats);
  for (int i = 0; i < repeats; ++i)
    stats.seeds[i] = base_seed + static_cast<uint64_t>(i);
  parallel_for(threads, static_cast<size_t>(repeats),
               [&](size_t i) { stats.values[i] = task(stats.seeds[i]); });
  for (double v : stats.values) stats.mean += v;
  stats.mean /= repeats;
  if (repeats > 1) {
    double ss = 0.0;
    for (double v : stats.values)
      ss += (v - stats.mean) * (v - stats.mean);
    stats.stddev = std::sqrt(ss / (repeats - 1));
  }
  return stats;
}

// One leave-one-relation-out run: drop the target relation, retrofit on the
// rest (or keep q_hat as-is when kind is empty), then train and score the
// link classifier on a split of the full graph. The split depends only on
// the seed, so every kind sees the same train and test edges.
inline double linkpred_protocol(const KnowledgeGraph& g,
                                const EmbeddingSet& q_hat,
                                const std::string& rel,
                                const std::optional<PenaltyKind>& kind,
                                RetrofitConfig cfg,
                                const ClassifierHyper& hyper, uint64_t seed) {
  LinkPredSplit split = make_linkpred_split(g, rel, cfg.neg_strategy, seed);
  const EmbeddingSet* emb = &q_hat;
  RetrofitResult result;
  if (kind) {
    cfg.kind = *kind;
    cfg.kind_by_relation.clear();
    cfg.seed = seed;
    KnowledgeGraph train = remove_relation(g, rel);
    result = *kind == PenaltyKind::neural
                 ? retrofit_sgd(train, q_hat, cfg)
                 : retrofit_closed_form(train, q_hat, cfg);
    emb = &result.embeddings;
  }
  LinkClassifier clf = train_link_classifier(split, *emb, hyper);
  return accuracy(clf, *emb, split.test_pos, split.test_neg);
}

}  // namespace kgretro
