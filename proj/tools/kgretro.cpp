#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kgretro/embeddings.hpp"
#include "kgretro/engine.hpp"
#include "kgretro/eval.hpp"
#include "kgretro/graph.hpp"
#include "kgretro/manifest.hpp"
#include "kgretro/penalty.hpp"
#include "kgretro/sampling.hpp"
#include "kgretro/sgd.hpp"
#include "kgretro/synthetic.hpp"

namespace fs = std::filesystem;
using namespace kgretro;

namespace {

struct SharedOpts {
  std::string graph;
  std::string classes;
  std::vector<std::string> embeddings;  // class=path, or a bare path
  std::string emb_format = "word2vec";
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int threads = 1;
  std::string config;
};

struct EngineOpts {
  std::string kind = "identity";
  double alpha = 1.0;
  std::vector<double> alpha_grid;
  double beta_pos = 1.0;
  double beta_neg = 0.0;
  double lambda = 0.01;
  int max_sweeps = 100;
  double tol = 1e-6;
  bool orthogonalize = true;
  double sgd_lr = 0.01;
  int sgd_epochs = 50;
  int sgd_batch = 128;
  std::string neg_strategy = "same-source";
};

void add_shared(CLI::App* sub, SharedOpts& o, bool graph, bool embeddings) {
  if (graph) {
    sub->add_option("--graph", o.graph,
                    "edge list, one src<TAB>rel<TAB>dst per line");
    sub->add_option("--classes", o.classes,
                    "optional id<TAB>class table for typed vertices");
  }
  if (embeddings) {
    sub->add_option("--embeddings", o.embeddings,
                    "pretrained vectors as class=path; bare path for "
                    "classless graphs (repeatable)");
    sub->add_option("--emb-format", o.emb_format,
                    "embedding file format (also used for outputs)")
        ->check(CLI::IsMember({"word2vec", "tsv"}));
  }
  sub->add_option("--out-dir", o.out_dir,
                  "output directory, created if missing");
  sub->add_option("--seed", o.seed, "seed for every random choice in the run");
  sub->add_option("--threads", o.threads,
                  "worker cap; results do not depend on it");
  sub->add_option("--config", o.config,
                  "key=value file, e.g. a previous run's manifest; "
                  "command-line flags win");
}

// Fill options the command line left untouched from a key=value file. A
// manifest qualifies: its informational keys match no option and fall
// through, so a run can be replayed straight from its own record.
void apply_config(CLI::App* sub, const std::string& path) {
  Manifest m = load_manifest(path);
  std::set<CLI::Option*> filled;
  for (const auto& [key, value] : m.items) {
    CLI::Option* op = sub->get_option_no_throw("--" + key);
    if (op == nullptr) continue;
    if (op->count() > 0 && filled.count(op) == 0) continue;
    op->add_result(value);
    filled.insert(op);
  }
  for (CLI::Option* op : filled) op->run_callback();
}

void require(const std::string& value, const std::string& flag) {
  if (value.empty()) throw input_error(flag + " is required");
}

void add_engine(CLI::App* sub, EngineOpts& e, bool with_grid) {
  sub->add_option("--kind", e.kind, "penalty family applied to every relation")
      ->check(CLI::IsMember({"identity", "translation", "linear", "neural"}));
  sub->add_option("--alpha", e.alpha, "anchor weight toward the input vectors");
  if (with_grid)
    sub->add_option("--alpha-grid", e.alpha_grid,
                    "comma-separated alphas; one output set per value")
        ->delimiter(',');
  sub->add_option("--beta-pos", e.beta_pos, "weight of present edges");
  sub->add_option("--beta-neg", e.beta_neg,
                  "weight of sampled non-edges (0 disables sampling)");
  sub->add_option("--lambda", e.lambda, "l2 strength on learned maps");
  sub->add_option("--max-sweeps", e.max_sweeps, "sweep or epoch budget");
  sub->add_option("--tol", e.tol, "relative objective change for convergence");
  sub->add_flag("--orthogonalize,!--no-orthogonalize", e.orthogonalize,
                "project each learned linear map to the nearest orthonormal "
                "matrix after every sweep");
  sub->add_option("--sgd-lr", e.sgd_lr, "learning rate for the neural kind");
  sub->add_option("--sgd-epochs", e.sgd_epochs, "epochs for the neural kind");
  sub->add_option("--sgd-batch", e.sgd_batch, "batch size for the neural kind");
  sub->add_option("--neg-strategy", e.neg_strategy,
                  "corrupted-target pool for negative sampling")
      ->check(CLI::IsMember({"same-source", "class-restricted"}));
}

RetrofitConfig make_config(const SharedOpts& s, const EngineOpts& e,
                           double alpha) {
  RetrofitConfig cfg;
  cfg.alpha = alpha;
  cfg.beta_pos = e.beta_pos;
  cfg.beta_neg = e.beta_neg;
  cfg.lambda = e.lambda;
  cfg.kind = parse_kind(e.kind);
  cfg.max_sweeps = e.max_sweeps;
  cfg.tol = e.tol;
  cfg.seed = s.seed;
  cfg.sgd = {e.sgd_lr, e.sgd_epochs, e.sgd_batch};
  cfg.orthogonalize = e.orthogonalize;
  cfg.threads = s.threads;
  cfg.neg_strategy = parse_strategy(e.neg_strategy);
  return cfg;
}

struct EmbeddingSpec {
  std::string cls;
  std::string path;
};

std::vector<EmbeddingSpec> parse_embedding_specs(const SharedOpts& s) {
  std::vector<EmbeddingSpec> specs;
  for (const auto& spec : s.embeddings) {
    auto eq = spec.find('=');
    EmbeddingSpec es;
    es.cls = eq == std::string::npos ? "" : spec.substr(0, eq);
    es.path = eq == std::string::npos ? spec : spec.substr(eq + 1);
    if (es.path.empty())
      throw input_error("--embeddings entry '" + spec + "' has no path");
    for (const auto& prev : specs)
      if (prev.cls == es.cls)
        throw input_error("duplicate embeddings for class '" + es.cls + "'");
    specs.push_back(std::move(es));
  }
  return specs;
}

std::map<std::string, EmbeddingSet> load_by_class(const SharedOpts& s) {
  std::map<std::string, EmbeddingSet> by_class;
  EmbFormat fmt = parse_emb_format(s.emb_format);
  for (const auto& es : parse_embedding_specs(s))
    by_class.emplace(es.cls, load_embeddings(es.path, fmt));
  return by_class;
}

Manifest base_manifest(const std::string& command, const SharedOpts& s,
                       bool graph, bool embeddings) {
  Manifest m;
  m.add("command", command);
  if (graph) {
    m.add("graph", s.graph);
    if (!s.classes.empty()) m.add("classes", s.classes);
  }
  if (embeddings) {
    for (const auto& spec : s.embeddings) m.add("embeddings", spec);
    m.add("emb-format", s.emb_format);
  }
  m.add("out-dir", s.out_dir);
  m.add("seed", std::to_string(s.seed));
  m.add("threads", std::to_string(s.threads));
  return m;
}

void add_engine_keys(Manifest& m, const EngineOpts& e, double alpha) {
  m.add("kind", e.kind);
  m.add("alpha", fmt_g17(alpha));
  m.add("beta-pos", fmt_g17(e.beta_pos));
  m.add("beta-neg", fmt_g17(e.beta_neg));
  m.add("lambda", fmt_g17(e.lambda));
  m.add("max-sweeps", std::to_string(e.max_sweeps));
  m.add("tol", fmt_g17(e.tol));
  m.add("orthogonalize", e.orthogonalize ? "true" : "false");
  m.add("sgd-lr", fmt_g17(e.sgd_lr));
  m.add("sgd-epochs", std::to_string(e.sgd_epochs));
  m.add("sgd-batch", std::to_string(e.sgd_batch));
  m.add("neg-strategy", e.neg_strategy);
}

// Informational keys start with "digest_" or "result_": no option is spelled
// with an underscore, so a reloaded manifest can never feed them back in.
void add_input_digests(Manifest& m, const SharedOpts& s, bool graph,
                       bool embeddings) {
  if (graph) {
    m.add("digest_graph", sha256_file(s.graph));
    if (!s.classes.empty()) m.add("digest_classes", sha256_file(s.classes));
  }
  if (embeddings)
    for (const auto& es : parse_embedding_specs(s))
      m.add("digest_embeddings" + (es.cls.empty() ? "" : "_" + es.cls),
            sha256_file(es.path));
}

void add_result_keys(Manifest& m, const RetrofitResult& res) {
  m.add("result_converged", res.converged ? "true" : "false");
  m.add("result_sweeps", std::to_string(res.sweeps_run));
  const auto& last = res.trace.back();
  m.add("result_anchor", fmt_g17(last.anchor));
  m.add("result_positive", fmt_g17(last.positive));
  m.add("result_negative", fmt_g17(last.negative));
  m.add("result_regularizer", fmt_g17(last.regularizer));
  m.add("result_total", fmt_g17(last.total));
}

void save_trace(const std::vector<ObjectiveBreakdown>& trace,
                const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot write '" + path + "'");
  out << "sweep\tanchor\tpositive\tnegative\tregularizer\ttotal\n";
  for (size_t i = 0; i < trace.size(); ++i)
    out << i << '\t' << fmt_g17(trace[i].anchor) << '\t'
        << fmt_g17(trace[i].positive) << '\t' << fmt_g17(trace[i].negative)
        << '\t' << fmt_g17(trace[i].regularizer) << '\t'
        << fmt_g17(trace[i].total) << '\n';
}

void save_embeddings_by_class(const KnowledgeGraph& g, const EmbeddingSet& emb,
                              const SharedOpts& s, const std::string& suffix,
                              Manifest& m) {
  std::map<std::string, EmbeddingSet> subset;
  for (const auto& v : g.vertices())
    subset[v.cls].insert(v.id, emb.at(v.id));
  EmbFormat fmt = parse_emb_format(s.emb_format);
  for (const auto& [cls, set] : subset) {
    std::string name =
        "retrofitted" + (cls.empty() ? "" : "_" + cls) + suffix + ".txt";
    std::string path = (fs::path(s.out_dir) / name).string();
    save_embeddings(set, path, fmt);
    m.add("output_embeddings" + (cls.empty() ? "" : "_" + cls), name);
  }
}

std::string alpha_suffix(double a) {
  std::ostringstream o;
  o << "_a" << a;
  return o.str();
}

std::string joined_relations(const KnowledgeGraph& g) {
  std::string all;
  for (const auto& r : g.relations()) all += (all.empty() ? "" : ", ") + r;
  return all;
}

void report_coverage(const AlignReport& ar) {
  for (const auto& [cls, cov] : ar.coverage)
    std::cout << "class " << (cls.empty() ? "(none)" : cls) << ": "
              << cov.first << "/" << cov.second << " entities anchored\n";
}

void report_load(const LoadReport& rep) {
  if (rep.duplicates_dropped > 0)
    std::cerr << "note: dropped " << rep.duplicates_dropped
              << " duplicate edges\n";
  if (rep.self_loops_dropped > 0)
    std::cerr << "note: dropped " << rep.self_loops_dropped
              << " self loops\n";
}

int run_retrofit(const SharedOpts& s, const EngineOpts& e) {
  require(s.graph, "--graph");
  if (s.embeddings.empty()) throw input_error("--embeddings is required");
  fs::create_directories(s.out_dir);
  LoadReport rep = load_edgelist(s.graph, s.classes);
  report_load(rep);
  AlignReport ar = align(rep.graph, load_by_class(s));
  report_coverage(ar);

  std::vector<double> alphas =
      e.alpha_grid.empty() ? std::vector<double>{e.alpha} : e.alpha_grid;
  bool all_converged = true;
  for (double a : alphas) {
    RetrofitConfig cfg = make_config(s, e, a);
    RetrofitResult res = cfg.kind == PenaltyKind::neural
                             ? retrofit_sgd(rep.graph, ar.aligned, cfg)
                             : retrofit_closed_form(rep.graph, ar.aligned, cfg);
    std::string suffix = alphas.size() == 1 ? "" : alpha_suffix(a);

    Manifest m = base_manifest("retrofit", s, true, true);
    add_engine_keys(m, e, a);
    add_input_digests(m, s, true, true);
    save_embeddings_by_class(rep.graph, res.embeddings, s, suffix, m);
    save_params(res.params,
                (fs::path(s.out_dir) / ("params" + suffix + ".txt")).string());
    save_trace(res.trace,
               (fs::path(s.out_dir) / ("trace" + suffix + ".tsv")).string());
    add_result_keys(m, res);
    save_manifest(
        m, (fs::path(s.out_dir) / ("run_manifest" + suffix + ".txt")).string());

    std::cout << "alpha " << a << ": "
              << (res.converged ? "converged after" : "stopped at") << " "
              << res.sweeps_run << " sweeps, objective "
              << res.trace.back().total << '\n';
    all_converged = all_converged && res.converged;
  }
  return all_converged ? 0 : 3;
}

int run_eval_linkpred(const SharedOpts& s, const EngineOpts& e,
                      const std::string& relation,
                      const std::vector<std::string>& kinds, int repeats,
                      bool interactions, double l2) {
  require(s.graph, "--graph");
  require(relation, "--relation");
  if (s.embeddings.empty()) throw input_error("--embeddings is required");
  fs::create_directories(s.out_dir);
  LoadReport rep = load_edgelist(s.graph, s.classes);
  report_load(rep);
  const KnowledgeGraph& g = rep.graph;
  auto rels = g.relations();
  if (std::find(rels.begin(), rels.end(), relation) == rels.end())
    throw input_error("relation '" + relation + "' not in graph (available: " +
                      joined_relations(g) + ")");
  AlignReport ar = align(g, load_by_class(s));
  report_coverage(ar);

  ClassifierHyper hyper;
  hyper.l2 = l2;
  hyper.interactions = interactions;
  RetrofitConfig cfg = make_config(s, e, e.alpha);
  LinkPredSplit first = make_linkpred_split(g, relation, cfg.neg_strategy,
                                            s.seed);

  Manifest m = base_manifest("eval-linkpred", s, true, true);
  add_engine_keys(m, e, e.alpha);
  m.add("relation", relation);
  std::string kinds_joined;
  for (const auto& k : kinds) kinds_joined += (kinds_joined.empty() ? "" : ",") + k;
  m.add("kinds", kinds_joined);
  m.add("repeats", std::to_string(repeats));
  m.add("interactions", interactions ? "true" : "false");
  m.add("l2", fmt_g17(l2));
  add_input_digests(m, s, true, true);

  std::cout << "kind\tmean\tstd\n";
  for (const auto& label : kinds) {
    std::optional<PenaltyKind> kind;
    if (label != "none") kind = parse_kind(label);
    auto task = [&](uint64_t seed) {
      return linkpred_protocol(g, ar.aligned, relation, kind, cfg, hyper,
                               seed);
    };
    RepeatStats st = repeat_eval(task, repeats, s.seed, s.threads);

    std::ostringstream row;
    row << label << '\t' << std::fixed << std::setprecision(4) << st.mean
        << '\t' << st.stddev;
    std::cout << row.str() << '\n';

    EvalReport r;
    r.metric = "linkpred-accuracy-" + label;
    r.value = st.mean;
    r.dispersion = st.stddev;
    r.n_train = first.train_pos.size() + first.train_neg.size();
    r.n_test = first.test_pos.size() + first.test_neg.size();
    r.seeds = st.seeds;
    std::string name = "report_" + label + ".txt";
    save_report(r, (fs::path(s.out_dir) / name).string());
    m.add("result_" + label, fmt_g17(st.mean));
  }
  save_manifest(m, (fs::path(s.out_dir) / "run_manifest.txt").string());
  return 0;
}

int run_eval_lexical(const SharedOpts& s, const std::string& task,
                     const std::string& data) {
  require(data, "--data");
  if (s.embeddings.empty()) throw input_error("--embeddings is required");
  fs::create_directories(s.out_dir);
  auto by_class = load_by_class(s);
  if (by_class.size() != 1)
    throw input_error("lexical evaluation takes exactly one embedding set");
  const EmbeddingSet& q = by_class.begin()->second;

  EvalReport r = task == "wordsim" ? word_similarity(q, load_wordsim(data))
                                   : analogy_eval(q, load_analogies(data));
  std::cout << r.metric << '\t' << std::fixed << std::setprecision(4)
            << r.value << "\t(" << r.n_test << " scored, " << r.n_dropped
            << " dropped)\n";
  save_report(r, (fs::path(s.out_dir) / "report.txt").string());

  Manifest m = base_manifest("eval-lexical", s, false, true);
  m.add("task", task);
  m.add("data", data);
  add_input_digests(m, s, false, true);
  m.add("digest_data", sha256_file(data));
  m.add("result_" + r.metric, fmt_g17(r.value));
  save_manifest(m, (fs::path(s.out_dir) / "run_manifest.txt").string());
  return 0;
}

int run_synth(const SharedOpts& s, const SynthOptions& so, double t_scale,
              int degree) {
  fs::create_directories(s.out_dir);
  SynthOptions opt = so;
  opt.t_scale = t_scale;
  opt.mean_out_degree = degree;
  opt.seed = s.seed;
  SynthData data = synth_graph(opt);

  EmbFormat fmt = parse_emb_format(s.emb_format);
  save_edgelist(data.graph, (fs::path(s.out_dir) / "graph.tsv").string());
  save_embeddings(data.truth, (fs::path(s.out_dir) / "truth.txt").string(),
                  fmt);
  save_embeddings(data.noisy, (fs::path(s.out_dir) / "noisy.txt").string(),
                  fmt);
  save_params(data.planted, (fs::path(s.out_dir) / "planted.txt").string());

  Manifest m;
  m.add("command", "synth");
  m.add("n", std::to_string(opt.n));
  m.add("d", std::to_string(opt.d));
  m.add("relations", std::to_string(opt.relations));
  m.add("sigma", fmt_g17(opt.sigma));
  m.add("t-scale", fmt_g17(opt.t_scale));
  m.add("degree", std::to_string(opt.mean_out_degree));
  m.add("emb-format", s.emb_format);
  m.add("out-dir", s.out_dir);
  m.add("seed", std::to_string(opt.seed));
  m.add("threads", std::to_string(s.threads));
  for (const auto& [rel, thr] : data.thresholds)
    m.add("result_threshold_" + rel, fmt_g17(thr));
  save_manifest(m, (fs::path(s.out_dir) / "run_manifest.txt").string());

  std::cout << "wrote " << data.graph.vertices().size() << " vertices, "
            << data.graph.edges().size() << " edges over " << opt.relations
            << " relations\n";
  return 0;
}

int run_stats(const SharedOpts& s) {
  require(s.graph, "--graph");
  fs::create_directories(s.out_dir);
  LoadReport rep = load_edgelist(s.graph, s.classes);
  report_load(rep);
  std::string table = format_stats(graph_stats(rep.graph));
  std::cout << table;
  std::string path = (fs::path(s.out_dir) / "stats.tsv").string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot write '" + path + "'");
  out << table;
  out.close();

  Manifest m = base_manifest("stats", s, true, false);
  add_input_digests(m, s, true, false);
  m.add("result_vertices", std::to_string(rep.graph.vertices().size()));
  m.add("result_edges", std::to_string(rep.graph.edges().size()));
  save_manifest(m, (fs::path(s.out_dir) / "run_manifest.txt").string());
  return 0;
}

int run_sample_neg(const SharedOpts& s, std::vector<std::string> relations,
                   const std::string& strategy, bool check) {
  require(s.graph, "--graph");
  fs::create_directories(s.out_dir);
  LoadReport rep = load_edgelist(s.graph, s.classes);
  report_load(rep);
  const KnowledgeGraph& g = rep.graph;
  if (relations.empty()) relations = g.relations();
  NegativeEdgeSet neg =
      sample_negative_edges(g, relations, s.seed, parse_strategy(strategy));

  std::string path = (fs::path(s.out_dir) / "negatives.tsv").string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot write '" + path + "'");
  for (const auto& e : neg.edges)
    out << e.src << '\t' << e.rel << '\t' << e.dst << '\n';
  out.close();

  if (neg.skipped > 0) {
    std::string who;
    for (const auto& src : neg.skipped_sources)
      who += (who.empty() ? "" : ", ") + src;
    std::cerr << "note: " << neg.skipped
              << " positives had no legal corrupted target (sources: " << who
              << ")\n";
  }

  if (check) {
    std::map<std::pair<std::string, std::string>, long> balance;
    for (const auto& e : g.edges())
      if (std::find(relations.begin(), relations.end(), e.rel) !=
          relations.end())
        ++balance[{e.src, e.rel}];
    for (const auto& e : neg.edges) {
      if (g.has_edge(e.src, e.rel, e.dst))
        throw input_error("check failed: sampled negative " + e.src + " -" +
                          e.rel + "-> " + e.dst + " is a positive edge");
      if (e.src == e.dst)
        throw input_error("check failed: sampled negative is a self loop");
      --balance[{e.src, e.rel}];
    }
    long unbalanced = 0;
    for (const auto& [key, residue] : balance)
      if (residue != 0) ++unbalanced;
    if (static_cast<size_t>(unbalanced) > neg.skipped_sources.size())
      throw input_error(
          "check failed: negative counts do not match positive counts "
          "beyond the reported saturated sources");
    std::cout << "check ok: " << neg.edges.size()
              << " negatives disjoint from positives, per-source balanced ("
              << neg.skipped << " skipped)\n";
  } else {
    std::cout << "wrote " << neg.edges.size() << " negatives\n";
  }

  Manifest m = base_manifest("sample-neg", s, true, false);
  std::string rels_joined;
  for (const auto& r : relations)
    rels_joined += (rels_joined.empty() ? "" : ",") + r;
  m.add("relations", rels_joined);
  m.add("strategy", strategy);
  m.add("check", check ? "true" : "false");
  add_input_digests(m, s, true, false);
  m.add("result_negatives", std::to_string(neg.edges.size()));
  m.add("result_skipped", std::to_string(neg.skipped));
  save_manifest(m, (fs::path(s.out_dir) / "run_manifest.txt").string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"retrofit pretrained entity embeddings to a typed, directed "
               "knowledge graph"};
  app.require_subcommand(1);

  SharedOpts s_retrofit, s_linkpred, s_lexical, s_synth, s_stats, s_neg;
  EngineOpts e_retrofit, e_linkpred;

  CLI::App* c_retrofit = app.add_subcommand(
      "retrofit", "fit embeddings to the graph and write them back out");
  add_shared(c_retrofit, s_retrofit, true, true);
  add_engine(c_retrofit, e_retrofit, true);

  std::string relation;
  std::vector<std::string> kinds = {"none", "identity", "linear"};
  int repeats = 1;
  bool interactions = false;
  double l2 = 1e-3;
  CLI::App* c_linkpred = app.add_subcommand(
      "eval-linkpred",
      "leave-one-relation-out link prediction over model kinds");
  add_shared(c_linkpred, s_linkpred, true, true);
  add_engine(c_linkpred, e_linkpred, false);
  c_linkpred->add_option("--relation", relation, "relation to hold out");
  c_linkpred
      ->add_option("--kinds", kinds,
                   "comma-separated rows; 'none' scores the input embeddings")
      ->delimiter(',');
  c_linkpred->add_option("--repeats", repeats,
                         "seeds per row, reported as mean and std");
  c_linkpred->add_flag("--interactions", interactions,
                       "add squared and source*target classifier features");
  c_linkpred->add_option("--l2", l2, "classifier ridge strength");

  std::string lex_task = "wordsim";
  std::string lex_data;
  CLI::App* c_lexical = app.add_subcommand(
      "eval-lexical", "word similarity or analogy scoring for embeddings");
  add_shared(c_lexical, s_lexical, false, true);
  c_lexical->add_option("--task", lex_task, "metric to compute")
      ->check(CLI::IsMember({"wordsim", "analogy"}));
  c_lexical->add_option("--data", lex_data, "dataset file");

  SynthOptions so;
  double t_scale = 0.5;
  int degree = 3;
  CLI::App* c_synth = app.add_subcommand(
      "synth", "generate a planted-relation graph with noisy embeddings");
  add_shared(c_synth, s_synth, false, false);
  c_synth->add_option("--n", so.n, "vertex count");
  c_synth->add_option("--d", so.d, "embedding dimension");
  c_synth->add_option("--relations", so.relations, "relation count");
  c_synth->add_option("--sigma", so.sigma, "per-component noise level");
  c_synth->add_option("--t-scale", t_scale, "planted translation length");
  c_synth->add_option("--degree", degree, "target mean out-degree");
  c_synth
      ->add_option("--emb-format", s_synth.emb_format,
                   "format for the written embedding files")
      ->check(CLI::IsMember({"word2vec", "tsv"}));

  CLI::App* c_stats = app.add_subcommand(
      "stats", "per-relation counts and class signatures for a graph");
  add_shared(c_stats, s_stats, true, false);

  std::vector<std::string> neg_relations;
  std::string neg_strategy = "same-source";
  bool neg_check = false;
  CLI::App* c_neg = app.add_subcommand(
      "sample-neg", "sample balanced negative edges for a graph");
  add_shared(c_neg, s_neg, true, false);
  c_neg->add_option("--relations", neg_relations,
                    "comma-separated relations (default: all)")
      ->delimiter(',');
  c_neg->add_option("--strategy", neg_strategy, "corrupted-target pool")
      ->check(CLI::IsMember({"same-source", "class-restricted"}));
  c_neg->add_flag("--check", neg_check,
                  "verify the sample against the contract after writing it");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    std::pair<CLI::App*, SharedOpts*> shared[] = {
        {c_retrofit, &s_retrofit}, {c_linkpred, &s_linkpred},
        {c_lexical, &s_lexical},   {c_synth, &s_synth},
        {c_stats, &s_stats},       {c_neg, &s_neg}};
    for (auto& [sub, opts] : shared)
      if (sub->parsed() && !opts->config.empty())
        apply_config(sub, opts->config);

    if (*c_retrofit) return run_retrofit(s_retrofit, e_retrofit);
    if (*c_linkpred)
      return run_eval_linkpred(s_linkpred, e_linkpred, relation, kinds,
                               repeats, interactions, l2);
    if (*c_lexical) return run_eval_lexical(s_lexical, lex_task, lex_data);
    if (*c_synth) return run_synth(s_synth, so, t_scale, degree);
    if (*c_stats) return run_stats(s_stats);
    if (*c_neg)
      return run_sample_neg(s_neg, neg_relations, neg_strategy, neg_check);
  } catch (const input_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const numeric_error& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
