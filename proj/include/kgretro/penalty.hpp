#pragma once

// Relational penalty functions f_r(q_i, q_j) scoring how well an edge
// (i, j) of relation r is explained by the current embeddings, together
// with their analytic gradients and parameter (de)serialization.

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kgretro/common.hpp"

namespace kgretro {

enum class PenaltyKind { identity, translation, linear, neural };

inline std::string kind_name(PenaltyKind k) {
  switch (k) {
    case PenaltyKind::identity: return "identity";
    case PenaltyKind::translation: return "translation";
    case PenaltyKind::linear: return "linear";
    case PenaltyKind::neural: return "neural";
  }
  throw input_error("unknown penalty kind");
}

inline PenaltyKind parse_kind(const std::string& s) {
  if (s == "identity") return PenaltyKind::identity;
  if (s == "translation") return PenaltyKind::translation;
  if (s == "linear") return PenaltyKind::linear;
  if (s == "neural") return PenaltyKind::neural;
  throw input_error("unknown penalty kind '" + s + "'");
}

// Per-relation parameters. The affine kinds score an edge as
// ||A q_j + b - q_i||^2 with A and b frozen or learned depending on the
// kind; the neural kind scores it as tanh(q_i' A q_j) with b unused.
struct RelationParams {
  std::string rel;
  PenaltyKind kind = PenaltyKind::identity;
  Eigen::MatrixXd A;  // d_src x d_dst
  Eigen::VectorXd b;  // d_src
};

inline RelationParams init_params(const std::string& rel, PenaltyKind kind,
                                  Eigen::Index d_src, Eigen::Index d_dst,
                                  std::uint64_t seed) {
  if ((kind == PenaltyKind::identity || kind == PenaltyKind::translation) &&
      d_src != d_dst)
    throw input_error("relation '" + rel + "': " + kind_name(kind) +
                      " penalty needs matching dimensions, got " +
                      std::to_string(d_src) + " and " + std::to_string(d_dst));
  RelationParams p;
  p.rel = rel;
  p.kind = kind;
  p.A = Eigen::MatrixXd::Identity(d_src, d_dst);
  p.b = Eigen::VectorXd::Zero(d_src);
  if (kind == PenaltyKind::neural) {
    std::mt19937_64 rng(mix_seed(seed, 0x6e657572ULL));
    std::uniform_real_distribution<double> u(-0.01, 0.01);
    for (Eigen::Index i = 0; i < d_src; ++i)
      for (Eigen::Index j = 0; j < d_dst; ++j) p.A(i, j) += u(rng);
  }
  return p;
}

inline double penalty_value(const RelationParams& p, const Eigen::VectorXd& qi,
                            const Eigen::VectorXd& qj) {
  if (p.kind == PenaltyKind::neural) return std::tanh(qi.dot(p.A * qj));
  return (p.A * qj + p.b - qi).squaredNorm();
}

struct PenaltyGradients {
  Eigen::VectorXd d_qi;
  Eigen::VectorXd d_qj;
  Eigen::VectorXd d_b;
  Eigen::MatrixXd d_A;
};

inline PenaltyGradients penalty_gradients(const RelationParams& p,
                                          const Eigen::VectorXd& qi,
                                          const Eigen::VectorXd& qj) {
  PenaltyGradients g;
  if (p.kind == PenaltyKind::neural) {
    double t = std::tanh(qi.dot(p.A * qj));
    double u = 1.0 - t * t;
    g.d_qi = u * (p.A * qj);
    g.d_qj = u * (p.A.transpose() * qi);
    g.d_b = Eigen::VectorXd::Zero(p.b.size());
    g.d_A = u * (qi * qj.transpose());
    return g;
  }
  Eigen::VectorXd e = p.A * qj + p.b - qi;
  g.d_qi = -2.0 * e;
  g.d_qj = 2.0 * (p.A.transpose() * e);
  g.d_b = 2.0 * e;
  g.d_A = 2.0 * (e * qj.transpose());
  return g;
}

inline void save_params(const std::map<std::string, RelationParams>& params,
                        const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot write " + path);
  for (const auto& [name, p] : params) {
    out << '[' << name << ' ' << kind_name(p.kind) << ' ' << p.A.rows() << ' '
        << p.A.cols() << "]\n";
    for (Eigen::Index i = 0; i < p.b.size(); ++i)
      out << (i ? " " : "") << fmt_g17(p.b[i]);
    out << '\n';
    for (Eigen::Index i = 0; i < p.A.rows(); ++i) {
      for (Eigen::Index j = 0; j < p.A.cols(); ++j)
        out << (j ? " " : "") << fmt_g17(p.A(i, j));
      out << '\n';
    }
  }
  if (!out.flush()) throw input_error("failed writing " + path);
}

namespace detail {

inline Eigen::VectorXd parse_row(const std::string& line, Eigen::Index want,
                                 const std::string& path, std::size_t lineno) {
  auto toks = split(line, ' ');
  std::vector<double> vals;
  for (auto t : toks)
    if (!t.empty())
      vals.push_back(
          parse_double(t, path + " line " + std::to_string(lineno)));
  if (static_cast<Eigen::Index>(vals.size()) != want)
    throw input_error(path + " line " + std::to_string(lineno) + ": expected " +
                      std::to_string(want) + " values, got " +
                      std::to_string(vals.size()));
  return Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size());
}

}  // namespace detail

inline std::map<std::string, RelationParams> load_params(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open " + path);
  std::map<std::string, RelationParams> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() != '[' || line.back() != ']')
      throw input_error(path + " line " + std::to_string(lineno) +
                        ": expected a [relation kind rows cols] section");
    // The relation name may contain spaces, so peel the three trailing
    // fields off the right.
    std::string body = line.substr(1, line.size() - 2);
    auto toks = split(body, ' ');
    if (toks.size() < 4)
      throw input_error(path + " line " + std::to_string(lineno) +
                        ": malformed section header");
    Eigen::Index rows = 0, cols = 0;
    try {
      rows = std::stol(std::string(toks[toks.size() - 2]));
      cols = std::stol(std::string(toks[toks.size() - 1]));
    } catch (const std::exception&) {
      throw input_error(path + " line " + std::to_string(lineno) +
                        ": bad dimensions in section header");
    }
    PenaltyKind kind = parse_kind(std::string(toks[toks.size() - 3]));
    std::string rel;
    for (std::size_t i = 0; i + 3 < toks.size(); ++i) {
      if (i) rel += ' ';
      rel += std::string(toks[i]);
    }
    if (rel.empty() || rows <= 0 || cols <= 0)
      throw input_error(path + " line " + std::to_string(lineno) +
                        ": malformed section header");
    RelationParams p;
    p.rel = rel;
    p.kind = kind;
    if (!std::getline(in, line))
      throw input_error(path + ": truncated section for '" + rel + "'");
    ++lineno;
    p.b = detail::parse_row(line, rows, path, lineno);
    p.A.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (!std::getline(in, line))
        throw input_error(path + ": truncated section for '" + rel + "'");
      ++lineno;
      p.A.row(i) = detail::parse_row(line, cols, path, lineno).transpose();
    }
    if (!out.emplace(rel, std::move(p)).second)
      throw input_error(path + ": duplicate relation '" + rel + "'");
  }
  return out;
}

}  // namespace kgretro
