#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "kgretro/common.hpp"
#include "kgretro/graph.hpp"

namespace kgretro {

// Id-keyed dense vectors. A vector is "anchored" exactly when it is nonzero;
// align() inserts zero vectors for entities without pretrained embeddings,
// and the retrofit objective gives those no anchor weight.
class EmbeddingSet {
 public:
  void insert(const std::string& id, Eigen::VectorXd vec) {
    if (!entries_.emplace(id, std::move(vec)).second)
      throw input_error("duplicate embedding id '" + id + "'");
  }

  bool has(const std::string& id) const { return entries_.count(id); }

  const Eigen::VectorXd& at(const std::string& id) const {
    auto it = entries_.find(id);
    if (it == entries_.end())
      throw input_error("no embedding for '" + id + "'");
    return it->second;
  }

  bool anchored(const std::string& id) const {
    return at(id).squaredNorm() > 0.0;
  }

  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  const std::map<std::string, Eigen::VectorXd>& entries() const {
    return entries_;
  }
  std::map<std::string, Eigen::VectorXd>& entries() { return entries_; }

  const std::map<std::string, Eigen::Index>& class_dims() const {
    return class_dims_;
  }
  void set_class_dim(const std::string& cls, Eigen::Index d) {
    class_dims_[cls] = d;
  }

 private:
  std::map<std::string, Eigen::VectorXd> entries_;
  std::map<std::string, Eigen::Index> class_dims_;
};

enum class EmbFormat { word2vec, tsv };

inline EmbFormat parse_emb_format(const std::string& s) {
  if (s == "word2vec") return EmbFormat::word2vec;
  if (s == "tsv") return EmbFormat::tsv;
  throw input_error("unknown embedding format '" + s + "' (word2vec, tsv)");
}

// word2vec text: "N D" header, then space-separated rows. tsv: tab-separated
// rows, no header, dimension fixed by the first row.
inline EmbeddingSet load_embeddings(const std::string& path, EmbFormat fmt) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open embeddings '" + path + "'");

  EmbeddingSet set;
  std::string line;
  size_t lineno = 0;
  long declared_n = -1, declared_d = -1;
  Eigen::Index dim = -1;
  const char delim = fmt == EmbFormat::word2vec ? ' ' : '\t';

  if (fmt == EmbFormat::word2vec) {
    if (!std::getline(in, line))
      throw input_error("missing header in '" + path + "'");
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto head = split(line, ' ');
    if (head.size() != 2)
      throw input_error("bad header '" + line + "' in '" + path +
                        "' (want: count dim)");
    declared_n = static_cast<long>(parse_double(head[0], path + " header"));
    declared_d = static_cast<long>(parse_double(head[1], path + " header"));
    dim = declared_d;
  }

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line, delim);
    if (fields.size() < 2)
      throw input_error("malformed row at " + path + " line " +
                        std::to_string(lineno));
    const Eigen::Index d = static_cast<Eigen::Index>(fields.size()) - 1;
    if (dim < 0) dim = d;
    if (d != dim)
      throw input_error("inconsistent vector length at " + path + " line " +
                        std::to_string(lineno) + " (got " + std::to_string(d) +
                        ", want " + std::to_string(dim) + ")");
    Eigen::VectorXd v(d);
    for (Eigen::Index k = 0; k < d; ++k)
      v[k] = parse_double(fields[k + 1],
                          path + " line " + std::to_string(lineno));
    if (set.has(fields[0]))
      throw input_error("duplicate embedding id '" + fields[0] + "' at " +
                        path + " line " + std::to_string(lineno));
    set.insert(fields[0], std::move(v));
  }

  if (declared_n >= 0 && static_cast<long>(set.size()) != declared_n)
    throw input_error("'" + path + "' header declares " +
                      std::to_string(declared_n) + " rows but " +
                      std::to_string(set.size()) + " were read");
  if (dim > 0) set.set_class_dim("", dim);
  return set;
}

inline void save_embeddings(const EmbeddingSet& set, const std::string& path,
                            EmbFormat fmt) {
  Eigen::Index dim = 0;
  for (const auto& [id, v] : set.entries()) {
    if (dim == 0) dim = v.size();
    if (v.size() != dim)
      throw input_error(
          "embedding set has mixed dimensions; save one class at a time");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot write '" + path + "'");
  const char delim = fmt == EmbFormat::word2vec ? ' ' : '\t';
  if (fmt == EmbFormat::word2vec)
    out << set.size() << ' ' << dim << '\n';
  for (const auto& [id, v] : set.entries()) {
    out << id;
    for (Eigen::Index k = 0; k < v.size(); ++k)
      out << delim << fmt_g17(v[k]);
    out << '\n';
  }
}

struct AlignReport {
  EmbeddingSet aligned;
  // class -> (entities with a pretrained vector, entities in the class)
  std::map<std::string, std::pair<size_t, size_t>> coverage;
};

// One embedding per graph vertex: copied from the matching per-class set
// when present, otherwise a zero (unanchored) vector of that class's width.
inline AlignReport align(const KnowledgeGraph& g,
                         const std::map<std::string, EmbeddingSet>& by_class) {
  std::map<std::string, Eigen::Index> dims;
  for (const auto& [cls, set] : by_class) {
    Eigen::Index d = 0;
    for (const auto& [id, v] : set.entries()) {
      if (d == 0) d = v.size();
      if (v.size() != d)
        throw input_error("embedding set for class '" + cls +
                          "' has mixed dimensions");
    }
    if (d == 0)
      throw input_error("embedding set for class '" + cls + "' is empty");
    dims[cls] = d;
  }

  AlignReport rep;
  for (const auto& v : g.vertices()) {
    auto setit = by_class.find(v.cls);
    if (setit == by_class.end())
      throw input_error("no embedding set for entity class '" + v.cls + "'");
    auto& cov = rep.coverage[v.cls];
    ++cov.second;
    if (setit->second.has(v.id)) {
      ++cov.first;
      rep.aligned.insert(v.id, setit->second.at(v.id));
    } else {
      rep.aligned.insert(v.id, Eigen::VectorXd::Zero(dims[v.cls]));
    }
  }
  for (const auto& [cls, d] : dims) rep.aligned.set_class_dim(cls, d);
  return rep;
}

// Sparse nonnegative counts with explicit row/column id lists.
struct CooccurrenceMatrix {
  std::vector<std::string> rows, cols;
  std::vector<std::tuple<size_t, size_t, double>> counts;
};

// Positive pointwise mutual information followed by l2 row normalization.
// Rows with no positively associated context stay zero (unanchored).
inline EmbeddingSet pmi_l2_normalize(const CooccurrenceMatrix& c) {
  std::vector<double> row_tot(c.rows.size(), 0.0), col_tot(c.cols.size(), 0.0);
  double total = 0.0;
  for (const auto& [i, j, v] : c.counts) {
    if (i >= c.rows.size() || j >= c.cols.size())
      throw input_error("cooccurrence entry out of range");
    if (v < 0.0) throw input_error("negative cooccurrence count");
    row_tot[i] += v;
    col_tot[j] += v;
    total += v;
  }
  if (total <= 0.0)
    throw input_error("cooccurrence matrix has no mass");

  std::vector<Eigen::VectorXd> rows(
      c.rows.size(), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(
                         c.cols.size())));
  for (const auto& [i, j, v] : c.counts) {
    if (v <= 0.0) continue;
    const double pmi = std::log(v * total / (row_tot[i] * col_tot[j]));
    if (pmi > 0.0) rows[i][static_cast<Eigen::Index>(j)] = pmi;
  }

  EmbeddingSet set;
  for (size_t i = 0; i < c.rows.size(); ++i) {
    const double n = rows[i].norm();
    if (n > 0.0) rows[i] /= n;
    set.insert(c.rows[i], std::move(rows[i]));
  }
  set.set_class_dim("", static_cast<Eigen::Index>(c.cols.size()));
  return set;
}

}  // namespace kgretro
