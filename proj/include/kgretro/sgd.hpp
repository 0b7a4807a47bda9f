#pragma once

// Mini-batch stochastic gradient descent for the neural penalty kind.
// Closed-form block updates do not apply to tanh scores, so both the
// bilinear maps and the vertex vectors move along analytic gradients.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "kgretro/engine.hpp"

namespace kgretro {

namespace detail {

struct SignedEdge {
  size_t src = 0;
  size_t dst = 0;
  size_t rel = 0;
  double w = 0.0;  // beta / d_r(src), negated for sampled non-edges
};

}  // namespace detail

// Neural-kind retrofitting. Negatives are resampled every epoch from seeds
// derived from cfg.seed; the per-epoch trace objective is evaluated on one
// fixed reference negative set so that a zero learning rate reproduces the
// initial breakdown bit for bit.
inline RetrofitResult retrofit_sgd(const KnowledgeGraph& g,
                                   const EmbeddingSet& q_hat,
                                   const RetrofitConfig& cfg) {
  cfg.validate();
  for (const auto& rel : g.relations())
    if (cfg.kind_for(rel) != PenaltyKind::neural)
      throw input_error("relation '" + rel + "' has a closed-form kind (" +
                        kind_name(cfg.kind_for(rel)) +
                        "); use the closed-form driver instead");

  NegativeEdgeSet ref_neg;
  if (cfg.beta_neg > 0)
    ref_neg = sample_negative_edges(g, g.relations(), mix_seed(cfg.seed, 0),
                                    cfg.neg_strategy);
  RetrofitProblem prob(g, ref_neg, q_hat, cfg);

  const auto& verts = g.vertices();
  const size_t n = verts.size();
  auto rels = g.relations();
  std::map<std::string, size_t> rel_index;
  for (size_t r = 0; r < rels.size(); ++r) rel_index[rels[r]] = r;
  std::vector<RelationParams*> param_ptr(rels.size());
  for (size_t r = 0; r < rels.size(); ++r)
    param_ptr[r] = &prob.params().at(rels[r]);

  std::vector<double> alpha(n);
  std::vector<Eigen::VectorXd> anchor(n);
  for (size_t v = 0; v < n; ++v) {
    anchor[v] = q_hat.at(verts[v].id);
    alpha[v] = q_hat.anchored(verts[v].id) ? cfg.alpha : 0.0;
  }

  auto weight_of = [&](const Edge& e, double beta) {
    return beta /
           static_cast<double>(std::max<size_t>(1, g.out_degree(e.src, e.rel)));
  };

  std::vector<detail::SignedEdge> positives;
  positives.reserve(g.edges().size());
  for (const auto& e : g.edges())
    positives.push_back({g.vertex_index(e.src), g.vertex_index(e.dst),
                         rel_index.at(e.rel), weight_of(e, cfg.beta_pos)});

  RetrofitResult res;
  res.trace.push_back(prob.objective());

  auto& q = prob.q();
  std::vector<Eigen::VectorXd> grad_q(n);
  std::vector<Eigen::MatrixXd> grad_A(rels.size());

  for (int epoch = 1; epoch <= cfg.sgd.epochs; ++epoch) {
    std::vector<detail::SignedEdge> batch_edges = positives;
    if (cfg.beta_neg > 0) {
      auto neg = sample_negative_edges(g, rels, mix_seed(cfg.seed, epoch),
                                       cfg.neg_strategy);
      for (const auto& e : neg.edges)
        batch_edges.push_back({g.vertex_index(e.src), g.vertex_index(e.dst),
                               rel_index.at(e.rel),
                               -weight_of(e, cfg.beta_neg)});
    }
    std::mt19937_64 shuffle_rng(
        mix_seed(cfg.seed, 0x8000000000000000ULL | std::uint64_t(epoch)));
    std::shuffle(batch_edges.begin(), batch_edges.end(), shuffle_rng);

    const size_t total = batch_edges.size();
    const size_t bs = static_cast<size_t>(cfg.sgd.batch_size);
    size_t batch_index = 0;
    for (size_t start = 0; start < total; start += bs, ++batch_index) {
      const size_t stop = std::min(total, start + bs);
      const double scale = static_cast<double>(stop - start) /
                           static_cast<double>(total);

      for (size_t v = 0; v < n; ++v)
        grad_q[v] = Eigen::VectorXd::Zero(q[v].size());
      for (size_t r = 0; r < rels.size(); ++r)
        grad_A[r] = Eigen::MatrixXd::Zero(param_ptr[r]->A.rows(),
                                          param_ptr[r]->A.cols());

      for (size_t k = start; k < stop; ++k) {
        const auto& se = batch_edges[k];
        auto gr = penalty_gradients(*param_ptr[se.rel], q[se.src], q[se.dst]);
        grad_q[se.src].noalias() += se.w * gr.d_qi;
        grad_q[se.dst].noalias() += se.w * gr.d_qj;
        grad_A[se.rel].noalias() += se.w * gr.d_A;
      }
      for (size_t v = 0; v < n; ++v)
        if (alpha[v] > 0)
          grad_q[v].noalias() += scale * 2.0 * alpha[v] * (q[v] - anchor[v]);
      for (size_t r = 0; r < rels.size(); ++r)
        grad_A[r].noalias() += scale * 2.0 * cfg.lambda * param_ptr[r]->A;

      bool finite = true;
      for (size_t v = 0; v < n && finite; ++v)
        finite = grad_q[v].allFinite();
      for (size_t r = 0; r < rels.size() && finite; ++r)
        finite = grad_A[r].allFinite();
      if (!finite)
        throw numeric_error("non-finite gradient at epoch " +
                            std::to_string(epoch) + ", batch " +
                            std::to_string(batch_index) +
                            "; reduce --sgd-lr");

      for (size_t v = 0; v < n; ++v)
        q[v].noalias() -= cfg.sgd.learning_rate * grad_q[v];
      for (size_t r = 0; r < rels.size(); ++r)
        param_ptr[r]->A.noalias() -= cfg.sgd.learning_rate * grad_A[r];
    }

    res.trace.push_back(prob.objective());
    res.sweeps_run = epoch;
    if (!std::isfinite(res.trace.back().total))
      throw numeric_error("non-finite objective at epoch " +
                          std::to_string(epoch) + ", batch " +
                          std::to_string(batch_index) + "; reduce --sgd-lr");
  }

  res.converged = converged(res.trace, cfg.tol);
  res.embeddings = prob.export_embeddings();
  res.params = prob.params();
  return res;
}

}  // namespace kgretro
