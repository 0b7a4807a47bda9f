#pragma once

// Block-coordinate minimization of the retrofitting objective
//   sum_i alpha_i ||q_i - qhat_i||^2
//   + sum_pos beta_ijr f_r(q_i, q_j) - sum_neg beta_ijr f_r(q_i, q_j)
//   + lambda sum_r ||A_r||_F^2  (learnable maps only)
// with exact updates for b_r, A_r and q_i in turn.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "kgretro/common.hpp"
#include "kgretro/embeddings.hpp"
#include "kgretro/graph.hpp"
#include "kgretro/penalty.hpp"
#include "kgretro/sampling.hpp"

namespace kgretro {

struct SgdOptions {
  double learning_rate = 0.01;
  int epochs = 50;
  int batch_size = 128;
};

// Gauss-Seidel consumes fresh vertex values within a sweep and is the
// default; Jacobi updates every vertex from the previous sweep's snapshot,
// which allows the vertex loop to run in parallel.
enum class QUpdateMode { gauss_seidel, jacobi };

struct RetrofitConfig {
  double alpha = 1.0;     // trust in the distributional anchors
  double beta_pos = 1.0;  // trust in present edges
  double beta_neg = 0.0;  // distrust of sampled non-edges
  double lambda = 0.01;   // l2 strength on learnable maps
  PenaltyKind kind = PenaltyKind::identity;
  std::map<std::string, PenaltyKind> kind_by_relation;  // overrides `kind`
  int max_sweeps = 100;
  double tol = 1e-6;  // relative objective change
  std::uint64_t seed = 0;
  SgdOptions sgd;
  bool orthogonalize = true;
  QUpdateMode q_mode = QUpdateMode::gauss_seidel;
  int threads = 1;
  NegStrategy neg_strategy = NegStrategy::same_source;

  PenaltyKind kind_for(const std::string& rel) const {
    auto it = kind_by_relation.find(rel);
    return it == kind_by_relation.end() ? kind : it->second;
  }

  void validate() const {
    if (alpha < 0 || beta_pos < 0 || beta_neg < 0 || lambda < 0)
      throw input_error("alpha, beta-pos, beta-neg and lambda must be >= 0");
    if (max_sweeps < 1) throw input_error("max-sweeps must be >= 1");
    if (!(tol > 0)) throw input_error("tol must be > 0");
    if (threads < 1) throw input_error("threads must be >= 1");
    if (sgd.learning_rate < 0) throw input_error("sgd-lr must be >= 0");
    if (sgd.epochs < 0) throw input_error("sgd-epochs must be >= 0");
    if (sgd.batch_size < 1) throw input_error("sgd-batch must be >= 1");
  }
};

struct ObjectiveBreakdown {
  double anchor = 0.0;
  double positive = 0.0;
  double negative = 0.0;
  double regularizer = 0.0;
  double total = 0.0;  // anchor + positive - negative + regularizer
};

struct RetrofitResult {
  EmbeddingSet embeddings;
  std::map<std::string, RelationParams> params;
  std::vector<ObjectiveBreakdown> trace;  // index 0 is the initial state
  bool converged = false;
  int sweeps_run = 0;
  std::size_t skipped_q_updates = 0;
};

inline bool converged(const std::vector<ObjectiveBreakdown>& trace,
                      double tol) {
  if (trace.size() < 2) return false;
  double prev = trace[trace.size() - 2].total;
  return std::abs(trace.back().total - prev) <=
         tol * std::max(1.0, std::abs(prev));
}

// Mutable optimization state for one graph + anchor set + config. Exact
// per-block updates; callers drive the sweep order.
class RetrofitProblem {
 public:
  RetrofitProblem(const KnowledgeGraph& g, const NegativeEdgeSet& neg,
                  const EmbeddingSet& q_hat, const RetrofitConfig& cfg)
      : g_(g), cfg_(cfg) {
    cfg_.validate();
    const auto& verts = g.vertices();
    const size_t n = verts.size();
    q_.resize(n);
    q_hat_.resize(n);
    alpha_.resize(n);
    for (size_t v = 0; v < n; ++v) {
      if (!q_hat.has(verts[v].id))
        throw input_error("vertex '" + verts[v].id +
                          "' has no embedding; align the set to the graph "
                          "first");
      q_hat_[v] = q_hat.at(verts[v].id);
      q_[v] = q_hat_[v];
      alpha_[v] = q_hat.anchored(verts[v].id) ? cfg_.alpha : 0.0;
    }
    class_dims_ = q_hat.class_dims();

    rel_names_ = g.relations();
    for (size_t r = 0; r < rel_names_.size(); ++r)
      rel_index_[rel_names_[r]] = r;
    rel_pos_.resize(rel_names_.size());
    rel_neg_.resize(rel_names_.size());

    const auto& edges = g.edges();
    pos_src_.resize(edges.size());
    pos_dst_.resize(edges.size());
    pos_rel_.resize(edges.size());
    pos_w_.resize(edges.size());
    std::vector<Eigen::Index> d_src(rel_names_.size(), -1);
    std::vector<Eigen::Index> d_dst(rel_names_.size(), -1);
    for (size_t e = 0; e < edges.size(); ++e) {
      const size_t si = g.vertex_index(edges[e].src);
      const size_t di = g.vertex_index(edges[e].dst);
      const size_t r = rel_index_.at(edges[e].rel);
      pos_src_[e] = si;
      pos_dst_[e] = di;
      pos_rel_[e] = r;
      pos_w_[e] = cfg_.beta_pos / static_cast<double>(std::max<size_t>(
                                      1, g.out_degree(edges[e].src,
                                                      edges[e].rel)));
      rel_pos_[r].push_back(e);
      if (d_src[r] < 0) {
        d_src[r] = q_hat_[si].size();
        d_dst[r] = q_hat_[di].size();
      } else if (d_src[r] != q_hat_[si].size() ||
                 d_dst[r] != q_hat_[di].size()) {
        throw input_error("relation '" + edges[e].rel +
                          "' connects vectors of mixed dimensions");
      }
    }

    neg_src_.resize(neg.edges.size());
    neg_dst_.resize(neg.edges.size());
    neg_rel_.resize(neg.edges.size());
    neg_w_.resize(neg.edges.size());
    out_neg_.resize(n);
    in_neg_.resize(n);
    for (size_t e = 0; e < neg.edges.size(); ++e) {
      const Edge& ne = neg.edges[e];
      const size_t si = g.vertex_index(ne.src);
      const size_t di = g.vertex_index(ne.dst);
      auto it = rel_index_.find(ne.rel);
      if (it == rel_index_.end())
        throw input_error("negative edge uses unknown relation '" + ne.rel +
                          "'");
      const size_t r = it->second;
      if (q_hat_[si].size() != d_src[r] || q_hat_[di].size() != d_dst[r])
        throw input_error("negative edge " + ne.src + " -> " + ne.dst +
                          " does not match relation '" + ne.rel +
                          "' dimensions");
      neg_src_[e] = si;
      neg_dst_[e] = di;
      neg_rel_[e] = r;
      neg_w_[e] = cfg_.beta_neg / static_cast<double>(std::max<size_t>(
                                      1, g.out_degree(ne.src, ne.rel)));
      rel_neg_[r].push_back(e);
      out_neg_[si].push_back(e);
      in_neg_[di].push_back(e);
    }

    for (size_t r = 0; r < rel_names_.size(); ++r)
      params_[rel_names_[r]] =
          init_params(rel_names_[r], cfg_.kind_for(rel_names_[r]), d_src[r],
                      d_dst[r], mix_seed(cfg_.seed, r));
    param_ptr_.resize(rel_names_.size());
    for (size_t r = 0; r < rel_names_.size(); ++r)
      param_ptr_[r] = &params_.at(rel_names_[r]);

    ortho_ok_.assign(rel_names_.size(), 0);
    refresh_flags();
  }

  const KnowledgeGraph& graph() const { return g_; }
  const RetrofitConfig& config() const { return cfg_; }

  std::vector<Eigen::VectorXd>& q() { return q_; }
  const std::vector<Eigen::VectorXd>& q() const { return q_; }

  std::map<std::string, RelationParams>& params() {
    flags_dirty_ = true;
    return params_;
  }
  const std::map<std::string, RelationParams>& params() const {
    return params_;
  }

  ObjectiveBreakdown objective() const {
    ObjectiveBreakdown ob;
    for (size_t v = 0; v < q_.size(); ++v)
      if (alpha_[v] > 0) ob.anchor += alpha_[v] * (q_[v] - q_hat_[v]).squaredNorm();
    for (size_t e = 0; e < pos_src_.size(); ++e)
      ob.positive += pos_w_[e] * penalty_value(*param_ptr_[pos_rel_[e]],
                                               q_[pos_src_[e]], q_[pos_dst_[e]]);
    for (size_t e = 0; e < neg_src_.size(); ++e)
      ob.negative += neg_w_[e] * penalty_value(*param_ptr_[neg_rel_[e]],
                                               q_[neg_src_[e]], q_[neg_dst_[e]]);
    for (const auto& [rel, p] : params_)
      if (p.kind == PenaltyKind::linear || p.kind == PenaltyKind::neural)
        ob.regularizer += cfg_.lambda * p.A.squaredNorm();
    ob.total = ob.anchor + ob.positive - ob.negative + ob.regularizer;
    return ob;
  }

  // Exact minimizer of the objective in b_r with everything else fixed:
  // the signed weighted mean of the residuals q_i - A_r q_j.
  void update_b(const std::string& rel) {
    const size_t r = rel_idx(rel);
    RelationParams& p = *param_ptr_[r];
    if (p.kind != PenaltyKind::translation && p.kind != PenaltyKind::linear)
      throw input_error("relation '" + rel + "': b is frozen for " +
                        kind_name(p.kind) + " penalties");
    Eigen::VectorXd num = Eigen::VectorXd::Zero(p.b.size());
    double den = 0.0;
    for (size_t e : rel_pos_[r]) {
      num.noalias() += pos_w_[e] * (q_[pos_src_[e]] - p.A * q_[pos_dst_[e]]);
      den += pos_w_[e];
    }
    for (size_t e : rel_neg_[r]) {
      num.noalias() -= neg_w_[e] * (q_[neg_src_[e]] - p.A * q_[neg_dst_[e]]);
      den -= neg_w_[e];
    }
    if (std::abs(den) < 1e-12)
      throw input_error("relation '" + rel +
                        "': positive and negative beta mass cancel, the b "
                        "update is undefined; adjust --beta-neg");
    p.b = num / den;
  }

  // Exact minimizer in A_r: solve A V = U with
  //   U = sum_pos w (q_i - b) q_j' - sum_neg w (q_i - b) q_j'
  //   V = sum_pos w q_j q_j' - sum_neg w q_j q_j' + lambda I,
  // then optionally project onto the nearest semi-orthogonal matrix via the
  // polar factor of its singular value decomposition.
  void update_A(const std::string& rel, bool orthogonalize) {
    const size_t r = rel_idx(rel);
    RelationParams& p = *param_ptr_[r];
    if (p.kind != PenaltyKind::linear)
      throw input_error("relation '" + rel + "': A is not learned for " +
                        kind_name(p.kind) + " penalties here");
    const Eigen::Index ds = p.A.rows(), dd = p.A.cols();
    Eigen::MatrixXd U = Eigen::MatrixXd::Zero(ds, dd);
    Eigen::MatrixXd V = Eigen::MatrixXd::Zero(dd, dd);
    for (size_t e : rel_pos_[r]) {
      const Eigen::VectorXd& qj = q_[pos_dst_[e]];
      U.noalias() += pos_w_[e] * (q_[pos_src_[e]] - p.b) * qj.transpose();
      V.noalias() += pos_w_[e] * qj * qj.transpose();
    }
    for (size_t e : rel_neg_[r]) {
      const Eigen::VectorXd& qj = q_[neg_dst_[e]];
      U.noalias() -= neg_w_[e] * (q_[neg_src_[e]] - p.b) * qj.transpose();
      V.noalias() -= neg_w_[e] * qj * qj.transpose();
    }
    const double lam = std::max(cfg_.lambda, 1e-9);
    V.diagonal().array() += lam;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(V);
    Eigen::MatrixXd A = ldlt.solve(U.transpose()).transpose();
    const double scale = std::max(1.0, U.cwiseAbs().maxCoeff());
    if (ldlt.info() != Eigen::Success ||
        (A * V - U).cwiseAbs().maxCoeff() > 1e-8 * scale) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
          V, Eigen::EigenvaluesOnly);
      throw numeric_error("relation '" + rel +
                          "': normal matrix is numerically singular "
                          "(smallest eigenvalue " +
                          fmt_g17(es.eigenvalues()(0)) +
                          "); increase --lambda");
    }

    if (orthogonalize) {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(
          A, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const auto& sv = svd.singularValues();
      if (sv(sv.size() - 1) <= 1e-12 * sv(0))
        throw numeric_error("relation '" + rel +
                            "': fitted map is rank deficient (singular "
                            "values " +
                            fmt_g17(sv(0)) + " .. " +
                            fmt_g17(sv(sv.size() - 1)) +
                            "), orthogonal projection is not unique");
      A = svd.matrixU() * svd.matrixV().transpose();
    }
    p.A = std::move(A);
    ortho_ok_[r] = is_orthonormal(p.A);
  }

  // Exact minimizer in q_i with everything else fixed. Returns false (and
  // leaves q_i unchanged) when the vertex has no usable forces.
  bool update_q(size_t v) {
    ensure_flags();
    Eigen::VectorXd fresh;
    if (!compute_q(v, q_, &fresh)) return false;
    q_[v] = std::move(fresh);
    return true;
  }

  // One pass of parameter updates: b for translation/linear, then A for
  // linear. Relations are independent, so this may run in parallel.
  void sweep_relations(bool orthogonalize, int threads) {
    parallel_for(threads, rel_names_.size(), [&](size_t r) {
      const PenaltyKind k = param_ptr_[r]->kind;
      if (k == PenaltyKind::translation || k == PenaltyKind::linear)
        update_b(rel_names_[r]);
      if (k == PenaltyKind::linear) update_A(rel_names_[r], orthogonalize);
    });
  }

  // One pass of vertex updates in sorted-id order. Returns the number of
  // skipped vertices.
  size_t sweep_q(QUpdateMode mode, int threads) {
    ensure_flags();
    const size_t n = q_.size();
    if (mode == QUpdateMode::gauss_seidel) {
      size_t skipped = 0;
      for (size_t v = 0; v < n; ++v)
        if (!update_q(v)) ++skipped;
      return skipped;
    }
    std::vector<Eigen::VectorXd> fresh(n);
    std::vector<char> skipped(n, 0);
    const auto& snapshot = q_;
    parallel_for(threads, n, [&](size_t v) {
      if (!compute_q(v, snapshot, &fresh[v])) {
        fresh[v] = snapshot[v];
        skipped[v] = 1;
      }
    });
    q_ = std::move(fresh);
    return static_cast<size_t>(std::count(skipped.begin(), skipped.end(), 1));
  }

  EmbeddingSet export_embeddings() const {
    EmbeddingSet out;
    const auto& verts = g_.vertices();
    for (size_t v = 0; v < verts.size(); ++v) out.insert(verts[v].id, q_[v]);
    for (const auto& [cls, d] : class_dims_) out.set_class_dim(cls, d);
    return out;
  }

 private:
  size_t rel_idx(const std::string& rel) const {
    auto it = rel_index_.find(rel);
    if (it == rel_index_.end())
      throw input_error("unknown relation '" + rel + "'");
    return it->second;
  }

  static bool is_orthonormal(const Eigen::MatrixXd& A) {
    const Eigen::Index k = A.cols();
    if (A.rows() < k) return false;
    return (A.transpose() * A - Eigen::MatrixXd::Identity(k, k))
               .cwiseAbs()
               .maxCoeff() < 1e-12;
  }

  void refresh_flags() {
    for (size_t r = 0; r < rel_names_.size(); ++r) {
      const RelationParams& p = *param_ptr_[r];
      ortho_ok_[r] = (p.kind == PenaltyKind::identity ||
                      p.kind == PenaltyKind::translation)
                         ? 1
                         : is_orthonormal(p.A);
    }
    flags_dirty_ = false;
  }

  void ensure_flags() {
    if (flags_dirty_) refresh_flags();
  }

  // The per-vertex stationary system is M q_v = a with
  //   M = alpha_v I + sum_out_pos w I + sum_in_pos w A'A - (negative twins)
  //   a = alpha_v qhat_v + sum_out_pos w (A q_dst + b)
  //       + sum_in_pos w A'(q_src - b) - (negative twins).
  // When every incoming map has orthonormal columns, M is a scalar multiple
  // of the identity and the division is cheap; otherwise solve exactly.
  bool compute_q(size_t v, const std::vector<Eigen::VectorXd>& from,
                 Eigen::VectorXd* out) const {
    const Eigen::Index d = q_hat_[v].size();
    bool scalar = true;
    for (size_t e : g_.in_edges(v))
      if (!ortho_ok_[pos_rel_[e]]) scalar = false;
    for (size_t e : in_neg_[v])
      if (!ortho_ok_[neg_rel_[e]]) scalar = false;

    Eigen::VectorXd a = alpha_[v] * q_hat_[v];
    if (scalar) {
      double s = alpha_[v];
      for (size_t e : g_.out_edges(v)) {
        const RelationParams& p = *param_ptr_[pos_rel_[e]];
        s += pos_w_[e];
        a.noalias() += pos_w_[e] * (p.A * from[pos_dst_[e]] + p.b);
      }
      for (size_t e : out_neg_[v]) {
        const RelationParams& p = *param_ptr_[neg_rel_[e]];
        s -= neg_w_[e];
        a.noalias() -= neg_w_[e] * (p.A * from[neg_dst_[e]] + p.b);
      }
      for (size_t e : g_.in_edges(v)) {
        const RelationParams& p = *param_ptr_[pos_rel_[e]];
        s += pos_w_[e];
        a.noalias() += pos_w_[e] * (p.A.transpose() * (from[pos_src_[e]] - p.b));
      }
      for (size_t e : in_neg_[v]) {
        const RelationParams& p = *param_ptr_[neg_rel_[e]];
        s -= neg_w_[e];
        a.noalias() -= neg_w_[e] * (p.A.transpose() * (from[neg_src_[e]] - p.b));
      }
      if (std::abs(s) < 1e-12) return false;
      *out = a / s;
      return true;
    }

    Eigen::MatrixXd M = alpha_[v] * Eigen::MatrixXd::Identity(d, d);
    for (size_t e : g_.out_edges(v)) {
      const RelationParams& p = *param_ptr_[pos_rel_[e]];
      M.diagonal().array() += pos_w_[e];
      a.noalias() += pos_w_[e] * (p.A * from[pos_dst_[e]] + p.b);
    }
    for (size_t e : out_neg_[v]) {
      const RelationParams& p = *param_ptr_[neg_rel_[e]];
      M.diagonal().array() -= neg_w_[e];
      a.noalias() -= neg_w_[e] * (p.A * from[neg_dst_[e]] + p.b);
    }
    for (size_t e : g_.in_edges(v)) {
      const RelationParams& p = *param_ptr_[pos_rel_[e]];
      M.noalias() += pos_w_[e] * (p.A.transpose() * p.A);
      a.noalias() += pos_w_[e] * (p.A.transpose() * (from[pos_src_[e]] - p.b));
    }
    for (size_t e : in_neg_[v]) {
      const RelationParams& p = *param_ptr_[neg_rel_[e]];
      M.noalias() -= neg_w_[e] * (p.A.transpose() * p.A);
      a.noalias() -= neg_w_[e] * (p.A.transpose() * (from[neg_src_[e]] - p.b));
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
    Eigen::VectorXd x = ldlt.solve(a);
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if (ldlt.info() != Eigen::Success ||
        (M * x - a).cwiseAbs().maxCoeff() > 1e-8 * scale)
      return false;
    *out = std::move(x);
    return true;
  }

  const KnowledgeGraph& g_;
  RetrofitConfig cfg_;
  std::vector<Eigen::VectorXd> q_, q_hat_;
  std::vector<double> alpha_;
  std::map<std::string, Eigen::Index> class_dims_;

  std::vector<std::string> rel_names_;
  std::map<std::string, size_t> rel_index_;
  std::map<std::string, RelationParams> params_;
  std::vector<RelationParams*> param_ptr_;
  std::vector<char> ortho_ok_;
  bool flags_dirty_ = false;

  std::vector<size_t> pos_src_, pos_dst_, pos_rel_;
  std::vector<double> pos_w_;
  std::vector<std::vector<size_t>> rel_pos_, rel_neg_;
  std::vector<size_t> neg_src_, neg_dst_, neg_rel_;
  std::vector<double> neg_w_;
  std::vector<std::vector<size_t>> out_neg_, in_neg_;
};

// Stand-alone objective evaluation for externally supplied state.
inline ObjectiveBreakdown objective(
    const KnowledgeGraph& g, const NegativeEdgeSet& neg, const EmbeddingSet& q,
    const EmbeddingSet& q_hat,
    const std::map<std::string, RelationParams>& params,
    const RetrofitConfig& cfg) {
  RetrofitProblem prob(g, neg, q_hat, cfg);
  for (auto& [rel, p] : prob.params()) {
    auto it = params.find(rel);
    if (it == params.end())
      throw input_error("missing params for relation '" + rel + "'");
    if (it->second.A.rows() != p.A.rows() || it->second.A.cols() != p.A.cols())
      throw input_error("params for relation '" + rel +
                        "' have the wrong shape");
    p = it->second;
  }
  for (const auto& vert : g.vertices()) {
    const Eigen::VectorXd& qv = q.at(vert.id);
    if (qv.size() != prob.q()[g.vertex_index(vert.id)].size())
      throw input_error("embedding for '" + vert.id + "' has the wrong size");
    prob.q()[g.vertex_index(vert.id)] = qv;
  }
  return prob.objective();
}

using SweepHook = std::function<void(const RetrofitProblem&, int)>;

// Closed-form block descent for identity/translation/linear kinds. Each
// sweep refits every relation's parameters, then every vertex in sorted-id
// order, until the relative objective change drops below tol.
inline RetrofitResult retrofit_closed_form(const KnowledgeGraph& g,
                                           const EmbeddingSet& q_hat,
                                           const RetrofitConfig& cfg,
                                           const SweepHook& hook = {}) {
  cfg.validate();
  for (const auto& rel : g.relations())
    if (cfg.kind_for(rel) == PenaltyKind::neural)
      throw input_error("relation '" + rel +
                        "' is neural; use the sgd driver for neural kinds");

  NegativeEdgeSet neg;
  if (cfg.beta_neg > 0)
    neg = sample_negative_edges(g, g.relations(),
                                mix_seed(cfg.seed, 0x6e656761ULL),
                                cfg.neg_strategy);

  RetrofitProblem prob(g, neg, q_hat, cfg);
  RetrofitResult res;
  res.trace.push_back(prob.objective());
  for (int s = 1; s <= cfg.max_sweeps; ++s) {
    prob.sweep_relations(cfg.orthogonalize, cfg.threads);
    res.skipped_q_updates += prob.sweep_q(cfg.q_mode, cfg.threads);
    res.trace.push_back(prob.objective());
    res.sweeps_run = s;
    if (hook) hook(prob, s);
    if (res.trace.back().total < -1e12)
      throw numeric_error(
          "objective is unbounded below (total " +
          fmt_g17(res.trace.back().total) + " at sweep " + std::to_string(s) +
          "); the negative edge mass dominates, reduce --beta-neg");
    if (converged(res.trace, cfg.tol)) {
      res.converged = true;
      break;
    }
  }
  res.embeddings = prob.export_embeddings();
  res.params = prob.params();
  return res;
}

}  // namespace kgretro
