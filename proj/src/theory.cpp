// Copyright 2026 The Vulnspace Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vulnspace/theory.hpp"

#include "vulnspace/binio.hpp"
#include "vulnspace/error.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace vulnspace::theory {

const char* const kGraphCaution =
    "Edges are candidate compositions for an analyst to review. They are not confirmed exploit chains and "
    "need further filtering before use.";

// ---------------------------------------------------------------------------
// Formulas.

Formula Formula::constant(double v) {
  Formula f;
  f.op = Op::constant;
  f.value = v;
  return f;
}

Formula Formula::exists(Term t) {
  Formula f;
  f.op = Op::exists;
  f.a = t;
  return f;
}

Formula Formula::co(Term x, Term y) {
  Formula f;
  f.op = Op::co;
  f.a = x;
  f.b = y;
  return f;
}

namespace {

Formula compound(Op op, std::vector<Formula> args) {
  Formula f;
  f.op = op;
  f.args = std::move(args);
  return f;
}

bool term_binary(Term t) { return t != Term::u; }

std::string term_name(Term t) {
  switch (t) {
    case Term::u: return "u";
    case Term::v: return "v";
    case Term::plus_uv: return "plus(u, v)";
  }
  return "?";
}

}  // namespace

Formula Formula::negation(Formula f) { return compound(Op::negation, {std::move(f)}); }
Formula Formula::conjunction(Formula l, Formula r) { return compound(Op::conjunction, {std::move(l), std::move(r)}); }
Formula Formula::disjunction(Formula l, Formula r) { return compound(Op::disjunction, {std::move(l), std::move(r)}); }
Formula Formula::implication(Formula l, Formula r) { return compound(Op::implication, {std::move(l), std::move(r)}); }
Formula Formula::equivalence(Formula l, Formula r) { return compound(Op::equivalence, {std::move(l), std::move(r)}); }

bool Formula::binary() const {
  switch (op) {
    case Op::constant: return false;
    case Op::exists: return term_binary(a);
    case Op::co: return term_binary(a) || term_binary(b);
    default: return std::any_of(args.begin(), args.end(), [](const Formula& f) { return f.binary(); });
  }
}

std::string Formula::to_string() const {
  switch (op) {
    case Op::constant: return std::to_string(value);
    case Op::exists: return "exists(" + term_name(a) + ")";
    case Op::co: return "co(" + term_name(a) + ", " + term_name(b) + ")";
    case Op::negation: return "not " + args[0].to_string();
    case Op::conjunction: return "(" + args[0].to_string() + " and " + args[1].to_string() + ")";
    case Op::disjunction: return "(" + args[0].to_string() + " or " + args[1].to_string() + ")";
    case Op::implication: return "(" + args[0].to_string() + " -> " + args[1].to_string() + ")";
    case Op::equivalence: return "(" + args[0].to_string() + " <-> " + args[1].to_string() + ")";
  }
  return "?";
}

namespace {

// Evaluates a formula over an instantiation, remembering every node's values
// so that a backward pass can hand adjoints to the atoms.
class Evaluator {
 public:
  Evaluator(const Interpretation& m, const Instantiation& at) : m_(m), at_(at) {
    if (at.u.rows() == 0) throw InvalidArgument("satisfaction: empty instantiation batch");
    if (at.v.size() > 0 && at.v.rows() != at.u.rows()) throw DimensionError("satisfaction: u and v batches differ");
  }

  const MatrixXr& term(Term t) {
    switch (t) {
      case Term::u: return at_.u;
      case Term::v:
        if (at_.v.size() == 0) throw InvalidArgument("formula uses v but the instantiation is unary");
        return at_.v;
      case Term::plus_uv:
        if (plus_.size() == 0) plus_ = 0.5 * (term(Term::u) + term(Term::v));
        return plus_;
    }
    throw InvalidArgument("bad term");
  }

  const VectorXr& eval(const Formula& f) {
    if (const auto it = values_.find(&f); it != values_.end()) return it->second;
    const Index n = at_.u.rows();
    VectorXr out;
    switch (f.op) {
      case Op::constant: out = VectorXr::Constant(n, f.value); break;
      case Op::exists: out = m_.exists(term(f.a)); break;
      case Op::co: out = m_.co(term(f.a), term(f.b)); break;
      case Op::negation: out = (1.0 - eval(f.args[0]).array()).matrix(); break;
      case Op::conjunction: out = eval(f.args[0]).cwiseProduct(eval(f.args[1])); break;
      case Op::disjunction: {
        const VectorXr& a = eval(f.args[0]);
        const VectorXr& b = eval(f.args[1]);
        out = (a.array() + b.array() - a.array() * b.array()).matrix();
        break;
      }
      case Op::implication:
      case Op::equivalence: {
        const VectorXr& a = eval(f.args[0]);
        const VectorXr& b = eval(f.args[1]);
        out.resize(n);
        for (Index i = 0; i < n; ++i) out(i) = f.op == Op::implication ? t_implies(a(i), b(i)) : t_iff(a(i), b(i));
        break;
      }
    }
    if (out.size() != n) throw DimensionError("satisfaction: atom returned the wrong number of values");
    return values_.emplace(&f, std::move(out)).first->second;
  }

  struct AtomAdjoint {
    const Formula* atom;
    VectorXr adjoint;
  };

  void backward(const Formula& f, const VectorXr& adj, std::vector<AtomAdjoint>& atoms) {
    switch (f.op) {
      case Op::constant: return;
      case Op::exists:
      case Op::co: atoms.push_back({&f, adj}); return;
      case Op::negation: backward(f.args[0], -adj, atoms); return;
      case Op::conjunction: {
        const VectorXr a = eval(f.args[0]);
        const VectorXr b = eval(f.args[1]);
        backward(f.args[0], adj.cwiseProduct(b), atoms);
        backward(f.args[1], adj.cwiseProduct(a), atoms);
        return;
      }
      case Op::disjunction: {
        const VectorXr a = eval(f.args[0]);
        const VectorXr b = eval(f.args[1]);
        backward(f.args[0], adj.cwiseProduct((1.0 - b.array()).matrix()), atoms);
        backward(f.args[1], adj.cwiseProduct((1.0 - a.array()).matrix()), atoms);
        return;
      }
      case Op::implication:
      case Op::equivalence: {
        const VectorXr a = eval(f.args[0]);
        const VectorXr b = eval(f.args[1]);
        VectorXr da(a.size()), db(a.size());
        for (Index i = 0; i < a.size(); ++i) {
          const auto [ab_a, ab_b] = implies_partials(a(i), b(i));
          if (f.op == Op::implication) {
            da(i) = ab_a;
            db(i) = ab_b;
          } else {
            const auto [ba_b, ba_a] = implies_partials(b(i), a(i));
            const double i1 = t_implies(a(i), b(i));
            const double i2 = t_implies(b(i), a(i));
            da(i) = ab_a * i2 + i1 * ba_a;
            db(i) = ab_b * i2 + i1 * ba_b;
          }
        }
        backward(f.args[0], adj.cwiseProduct(da), atoms);
        backward(f.args[1], adj.cwiseProduct(db), atoms);
        return;
      }
    }
  }

 private:
  // (d/da, d/db) of min(1, b / max(a, eps)).
  static std::pair<double, double> implies_partials(double a, double b) {
    const double den = std::max(a, kImplicationEpsilon);
    if (b / den >= 1.0) return {0.0, 0.0};
    return {a > kImplicationEpsilon ? -b / (a * a) : 0.0, 1.0 / den};
  }

  const Interpretation& m_;
  const Instantiation& at_;
  MatrixXr plus_;
  std::unordered_map<const Formula*, VectorXr> values_;
};

double sigmoid(double s) { return 1.0 / (1.0 + std::exp(-s)); }

}  // namespace

VectorXr truth_values(const Formula& f, const Interpretation& m, const Instantiation& at) {
  Evaluator ev(m, at);
  return ev.eval(f);
}

double soft_satisfaction(const Formula& f, const Interpretation& m, const Instantiation& at) {
  return std::clamp(truth_values(f, m, at).mean(), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Axioms.

AxiomSet axiom_library(const std::map<std::string, double>& bounds) {
  using F = Formula;
  AxiomSet ax = {
      {"A1", "forall v in Vul: co(v, v)", F::co(Term::u, Term::u), 0.9, Domain::vul, false, 1.0},
      {"A2", "forall u, v: co(u, v) <-> co(v, u)", F::equivalence(F::co(Term::u, Term::v), F::co(Term::v, Term::u)), 1.0,
       Domain::space_pairs, true, 1.0},
      {"A3", "forall v in Vul: exists(v)", F::exists(Term::u), 0.95, Domain::vul, false, 1.0},
      {"A4", "forall u, v in Vul: co(u, v) -> exists(plus(u, v))",
       F::implication(F::co(Term::u, Term::v), F::exists(Term::plus_uv)), 0.7, Domain::vul_pairs, false, 1.0},
      {"A5", "forall s, t in Space: not co(s, t)", F::negation(F::co(Term::u, Term::v)), 0.7, Domain::space_pairs,
       false, 1.0},
  };
  for (const auto& [id, bound] : bounds) {
    const auto it = std::find_if(ax.begin(), ax.end(), [&](const Axiom& a) { return a.id == id; });
    if (it == ax.end()) throw InvalidArgument("unknown axiom id \"" + id + "\"");
    if (!(bound > 0 && bound <= 1)) throw InvalidArgument("axiom " + id + ": bound must lie in (0, 1]");
    it->bound = bound;
  }
  return ax;
}

nlohmann::json bounds_to_json(const AxiomSet& axioms) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& a : axioms) j[a.id] = a.bound;
  return j;
}

std::map<std::string, double> bounds_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("axiom bounds must be an object");
  std::map<std::string, double> out;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_number()) throw InvalidArgument("axiom bound " + k + " must be a number");
    out[k] = v.get<double>();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Relation and model.

CoRelation CoRelation::init(Index dim, Index rank, std::uint64_t seed) {
  if (dim < 1 || rank < 1) throw InvalidArgument("co relation needs dim >= 1 and rank >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
  CoRelation c;
  c.w1.resize(dim, rank);
  c.w2.resize(dim, rank);
  for (Index i = 0; i < dim; ++i)
    for (Index r = 0; r < rank; ++r) c.w1(i, r) = normal(rng);
  for (Index i = 0; i < dim; ++i)
    for (Index r = 0; r < rank; ++r) c.w2(i, r) = normal(rng);
  c.wa = RowVector<double>::Zero(dim);
  c.wb = RowVector<double>::Zero(dim);
  return c;
}

VectorXr CoRelation::half(const MatrixXr& x, const MatrixXr& y) const {
  if (x.cols() != dim() || y.cols() != dim() || x.rows() != y.rows())
    throw DimensionError("co: expected two batches of width " + std::to_string(dim()));
  const Matrix<double> xa = x * w1;
  const Matrix<double> yb = y * w2;
  VectorXr f = xa.cwiseProduct(yb).rowwise().sum();
  f += x * wa.transpose();
  f += y * wb.transpose();
  f.array() += b;
  return f;
}

VectorXr CoRelation::logits(const MatrixXr& x, const MatrixXr& y) const { return half(x, y) + half(y, x); }

VectorXr CoRelation::operator()(const MatrixXr& x, const MatrixXr& y) const {
  return logits(x, y).unaryExpr([](double s) { return sigmoid(s); });
}

VectorXr TheoryModel::exists(const MatrixXr& x) const {
  const Matrix<double> out = nn::predict(exists_net, x);
  return out.col(0);
}

VectorXr TheoryModel::co(const MatrixXr& x, const MatrixXr& y) const { return relation(x, y); }

const AxiomResult* TheoryModel::result(const std::string& id) const {
  for (const auto& r : results)
    if (r.id == id) return &r;
  return nullptr;
}

nlohmann::json SynthesisConfig::to_json() const {
  return {{"epochs", epochs},         {"batch", batch},         {"learning_rate", learning_rate},
          {"rank", rank},             {"exists_hidden", exists_hidden}, {"barrier", barrier},
          {"margin", margin},         {"perturbation", perturbation}, {"eval_samples", eval_samples},
          {"seeds", seeds}};
}

MatrixXr SpaceSampler::sample(Index n, std::mt19937_64& rng) const {
  const Index rows = rows_.rows();
  if (rows == 0) throw InvalidArgument("space sampler: no rows");
  std::uniform_int_distribution<Index> pick(0, rows - 1);
  std::uniform_int_distribution<int> kind(0, 2);
  std::normal_distribution<double> noise(0.0, sigma_);
  MatrixXr out(n, rows_.cols());
  for (Index i = 0; i < n; ++i) {
    switch (kind(rng)) {
      case 0: out.row(i) = rows_.row(pick(rng)); break;
      case 1: {
        const Index a = pick(rng);
        const Index b = pick(rng);
        out.row(i) = 0.5 * (rows_.row(a) + rows_.row(b));
        break;
      }
      default: {
        out.row(i) = rows_.row(pick(rng));
        for (Index c = 0; c < out.cols(); ++c) out(i, c) += noise(rng);
      }
    }
  }
  return out;
}

Instantiation instantiate(Domain domain, const MatrixXr& x, Index samples, double perturbation, std::mt19937_64& rng) {
  if (x.rows() == 0 || samples < 1) throw InvalidArgument("instantiate: need rows and a positive sample count");
  std::uniform_int_distribution<Index> pick(0, x.rows() - 1);
  Instantiation at;
  switch (domain) {
    case Domain::vul:
      if (samples >= x.rows()) {
        at.u = x;
      } else {
        at.u.resize(samples, x.cols());
        for (Index i = 0; i < samples; ++i) at.u.row(i) = x.row(pick(rng));
      }
      break;
    case Domain::vul_pairs:
      at.u.resize(samples, x.cols());
      at.v.resize(samples, x.cols());
      for (Index i = 0; i < samples; ++i) {
        at.u.row(i) = x.row(pick(rng));
        at.v.row(i) = x.row(pick(rng));
      }
      break;
    case Domain::space_pairs: {
      const SpaceSampler s(x, perturbation);
      at.u = s.sample(samples, rng);
      at.v = s.sample(samples, rng);
      break;
    }
  }
  return at;
}

std::vector<AxiomResult> evaluate_axioms(const Interpretation& m, const AxiomSet& axioms, const MatrixXr& x,
                                         Index samples, double perturbation, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<AxiomResult> out;
  for (const auto& a : axioms) {
    AxiomResult r{a.id, a.bound, 1.0, true};
    if (!a.structural) {
      const auto at = instantiate(a.domain, x, samples, perturbation, rng);
      r.satisfaction = soft_satisfaction(a.formula, m, at);
      r.met = r.satisfaction >= a.bound;
    }
    out.push_back(r);
  }
  return out;
}

ModelGradient ModelGradient::zeros_like(const TheoryModel& m) {
  ModelGradient g;
  g.exists = nn::Gradients<double>::zeros_like(m.exists_net);
  g.w1 = Matrix<double>::Zero(m.relation.w1.rows(), m.relation.w1.cols());
  g.w2 = Matrix<double>::Zero(m.relation.w2.rows(), m.relation.w2.cols());
  g.wa = RowVector<double>::Zero(m.relation.dim());
  g.wb = RowVector<double>::Zero(m.relation.dim());
  return g;
}

bool ModelGradient::all_finite() const {
  return exists.all_finite() && w1.allFinite() && w2.allFinite() && wa.allFinite() && wb.allFinite() &&
         std::isfinite(b);
}

double satisfaction_gradient(const Formula& f, const TheoryModel& m, const Instantiation& at, double scale,
                             ModelGradient& grad) {
  Evaluator ev(m, at);
  const VectorXr& root = ev.eval(f);
  const Index n = root.size();
  std::vector<Evaluator::AtomAdjoint> atoms;
  ev.backward(f, VectorXr::Constant(n, scale / static_cast<double>(n)), atoms);

  for (const auto& [atom, adj] : atoms) {
    if (atom->op == Op::exists) {
      const MatrixXr& in = ev.term(atom->a);
      const auto trace = nn::forward(m.exists_net, in);
      const auto& out = trace.output();
      Matrix<double> delta = (adj.array() * out.col(0).array() * (1.0 - out.col(0).array())).matrix();
      const auto g = nn::backprop(m.exists_net, trace, delta);
      for (std::size_t l = 0; l < g.weight.size(); ++l) {
        grad.exists.weight[l] += g.weight[l];
        grad.exists.bias[l] += g.bias[l];
      }
    } else {
      const MatrixXr& x = ev.term(atom->a);
      const MatrixXr& y = ev.term(atom->b);
      const VectorXr c = m.relation(x, y);
      const VectorXr ds = (adj.array() * c.array() * (1.0 - c.array())).matrix();
      const auto& r = m.relation;
      // s = f(x, y) + f(y, x)
      for (int swap = 0; swap < 2; ++swap) {
        const MatrixXr& p = swap ? y : x;
        const MatrixXr& q = swap ? x : y;
        grad.w1 += p.transpose() * (ds.asDiagonal() * (q * r.w2));
        grad.w2 += q.transpose() * (ds.asDiagonal() * (p * r.w1));
        grad.wa += ds.transpose() * p;
        grad.wb += ds.transpose() * q;
        grad.b += ds.sum();
      }
    }
  }
  return root.mean();
}

// ---------------------------------------------------------------------------
// Synthesis.

TheoryModel synthesize_one(const MatrixXr& x, const AxiomSet& axioms, const SynthesisConfig& cfg, std::uint64_t seed) {
  if (x.rows() < 2) throw InvalidArgument("synthesize: need at least two rows");
  if (cfg.epochs < 0 || cfg.batch < 1 || !(cfg.learning_rate >= 0) || cfg.rank < 0)
    throw InvalidArgument("synthesize: epochs >= 0, batch >= 1, learning_rate >= 0 and rank >= 0 required");
  TheoryModel m;
  m.seed = seed;
  m.epochs = cfg.epochs;
  std::vector<nn::LayerSpec> specs;
  for (const auto h : cfg.exists_hidden) specs.push_back({h, nn::Activation::relu, 0.0});
  specs.push_back({1, nn::Activation::sigmoid, 0.0});
  m.exists_net = nn::DenseNet<double>::build(x.cols(), specs, seed * 2 + 1);
  m.relation = CoRelation::init(x.cols(), cfg.rank > 0 ? cfg.rank : x.cols(), seed * 2 + 2);
  m.notes = {"product t-norm soft logic stands in for the original inference engine",
             "co is a symmetrized low-rank bilinear relation, not a full tensor network",
             "axiom bounds are configurable defaults, not published values"};

  const nn::AdamParams adam{cfg.learning_rate, 0.9, 0.999, 1e-8};
  nn::Adam<double> exists_opt(m.exists_net, adam);
  nn::AdamSlot<double> s_w1, s_w2, s_wa, s_wb, s_b;
  long step = 0;
  std::mt19937_64 rng(seed);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    ModelGradient total = ModelGradient::zeros_like(m);
    double objective = 0;
    for (const auto& a : axioms) {
      if (a.structural) continue;
      const auto at = instantiate(a.domain, x, cfg.batch, cfg.perturbation, rng);
      ModelGradient g = ModelGradient::zeros_like(m);
      const double sat = satisfaction_gradient(a.formula, m, at, 1.0, g);
      const double target = std::min(1.0, a.bound + cfg.margin);
      const double gap = std::max(0.0, target - sat);
      objective += a.weight * std::min(sat / target, 1.0) - cfg.barrier * gap * gap;
      // d objective / d sat; descent below runs on the negated objective.
      const double dj = gap > 0 ? a.weight / target + 2 * cfg.barrier * gap : 0.0;
      if (dj == 0) continue;
      for (std::size_t l = 0; l < total.exists.weight.size(); ++l) {
        total.exists.weight[l] -= dj * g.exists.weight[l];
        total.exists.bias[l] -= dj * g.exists.bias[l];
      }
      total.w1 -= dj * g.w1;
      total.w2 -= dj * g.w2;
      total.wa -= dj * g.wa;
      total.wb -= dj * g.wb;
      total.b -= dj * g.b;
    }
    if (!std::isfinite(objective) || !total.all_finite())
      throw TrainingError("theory synthesis (seed " + std::to_string(seed) + ") diverged at epoch " +
                          std::to_string(epoch));
    m.objective_trace.push_back(objective);
    ++step;
    exists_opt.step(m.exists_net, total.exists);
    s_w1.update(m.relation.w1, total.w1, adam, step);
    s_w2.update(m.relation.w2, total.w2, adam, step);
    s_wa.update(m.relation.wa, total.wa, adam, step);
    s_wb.update(m.relation.wb, total.wb, adam, step);
    Eigen::Matrix<double, 1, 1> bias{m.relation.b};
    const Eigen::Matrix<double, 1, 1> gb{total.b};
    s_b.update(bias, gb, adam, step);
    m.relation.b = bias(0, 0);
  }
  m.results = evaluate_axioms(m, axioms, x, cfg.eval_samples, cfg.perturbation, seed ^ 0x9e3779b97f4a7c15ull);
  return m;
}

std::vector<TheoryModel> synthesize(const MatrixXr& x, const AxiomSet& axioms, const SynthesisConfig& cfg) {
  if (cfg.seeds.empty()) throw InvalidArgument("synthesize: no seeds");
  std::vector<std::future<TheoryModel>> jobs;
  for (const auto seed : cfg.seeds)
    jobs.push_back(std::async(std::launch::async, [&, seed] { return synthesize_one(x, axioms, cfg, seed); }));
  std::vector<TheoryModel> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

// ---------------------------------------------------------------------------
// Graphs.

std::string excerpt(const std::string& text, std::size_t max_bytes) {
  if (text.size() <= max_bytes) return text;
  std::size_t cut = max_bytes;
  while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) --cut;
  return text.substr(0, cut) + "...";
}

namespace {

void finish_graph(CompositionGraph& g, const std::vector<std::string>& ids, const std::vector<std::string>& descriptions,
                  std::size_t max_nodes, const std::map<Index, GraphNode>* previous) {
  std::map<Index, int> degree;
  for (const auto& e : g.edges) {
    ++degree[e.a];
    ++degree[e.b];
  }
  std::vector<std::pair<int, Index>> ranked;
  for (const auto& [row, d] : degree) ranked.emplace_back(d, row);
  std::sort(ranked.begin(), ranked.end(), [](const auto& l, const auto& r) {
    return l.first != r.first ? l.first > r.first : l.second < r.second;
  });
  if (ranked.size() > max_nodes) {
    ranked.resize(max_nodes);
    std::set<Index> keep;
    for (const auto& [d, row] : ranked) keep.insert(row);
    std::erase_if(g.edges, [&](const GraphEdge& e) { return !keep.contains(e.a) || !keep.contains(e.b); });
    degree.clear();
    for (const auto& e : g.edges) {
      ++degree[e.a];
      ++degree[e.b];
    }
    ranked.clear();
    for (const auto& [row, d] : degree) ranked.emplace_back(d, row);
    std::sort(ranked.begin(), ranked.end(), [](const auto& l, const auto& r) {
      return l.first != r.first ? l.first > r.first : l.second < r.second;
    });
  }
  g.nodes.clear();
  for (const auto& [d, row] : ranked) {
    GraphNode n;
    n.row = row;
    n.degree = d;
    if (previous) {
      const auto& p = previous->at(row);
      n.cve_id = p.cve_id;
      n.excerpt = p.excerpt;
    } else {
      n.cve_id = ids.empty() ? std::to_string(row) : ids.at(static_cast<std::size_t>(row));
      n.excerpt = descriptions.empty() ? std::string() : excerpt(descriptions.at(static_cast<std::size_t>(row)));
    }
    g.nodes.push_back(std::move(n));
  }
  g.advisory = g.edges.empty() ? "no pair reaches co >= " + std::to_string(g.threshold) + "; the graph is empty"
                               : std::string();
}

}  // namespace

CompositionGraph extract_graph(const Interpretation& m, const MatrixXr& x, const std::vector<std::string>& ids,
                               const std::vector<std::string>& descriptions, double threshold, std::size_t max_nodes) {
  if (!(threshold > 0 && threshold <= 1)) throw InvalidArgument("graph threshold must lie in (0, 1]");
  if (max_nodes < 2) throw InvalidArgument("graph max_nodes must be at least 2");
  if (!ids.empty() && ids.size() != static_cast<std::size_t>(x.rows()))
    throw DimensionError("graph: id count does not match rows");
  if (!descriptions.empty() && descriptions.size() != static_cast<std::size_t>(x.rows()))
    throw DimensionError("graph: description count does not match rows");
  CompositionGraph g;
  g.threshold = threshold;
  const Index n = x.rows();
  for (Index i = 0; i + 1 < n; ++i) {
    const Index m_rows = n - i - 1;
    const MatrixXr left = x.row(i).replicate(m_rows, 1);
    const VectorXr p = m.co(left, x.bottomRows(m_rows));
    for (Index k = 0; k < m_rows; ++k)
      if (p(k) >= threshold) g.edges.push_back({i, i + 1 + k, p(k)});
  }
  finish_graph(g, ids, descriptions, max_nodes, nullptr);
  return g;
}

CompositionGraph filter_graph(const CompositionGraph& g, double threshold) {
  if (threshold < g.threshold) throw InvalidArgument("graph was extracted at a higher threshold");
  std::map<Index, GraphNode> previous;
  for (const auto& n : g.nodes) previous[n.row] = n;
  CompositionGraph out;
  out.threshold = threshold;
  for (const auto& e : g.edges)
    if (e.probability >= threshold) out.edges.push_back(e);
  finish_graph(out, {}, {}, std::numeric_limits<std::size_t>::max(), &previous);
  return out;
}

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default:
        // Control characters other than tab/newline are not allowed in XML 1.0.
        if (static_cast<unsigned char>(c) < 0x20 && c != '\t' && c != '\n' && c != '\r')
          out += ' ';
        else
          out += c;
    }
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

}  // namespace

void write_graphml(std::ostream& out, const CompositionGraph& g) {
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\"\n"
         "         xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\"\n"
         "         xsi:schemaLocation=\"http://graphml.graphdrawing.org/xmlns "
         "http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd\">\n"
         "  <key id=\"cve_id\" for=\"node\" attr.name=\"cve_id\" attr.type=\"string\"/>\n"
         "  <key id=\"excerpt\" for=\"node\" attr.name=\"excerpt\" attr.type=\"string\"/>\n"
         "  <key id=\"degree\" for=\"node\" attr.name=\"degree\" attr.type=\"int\"/>\n"
         "  <key id=\"probability\" for=\"edge\" attr.name=\"probability\" attr.type=\"double\"/>\n"
         "  <key id=\"threshold\" for=\"graph\" attr.name=\"threshold\" attr.type=\"double\"/>\n"
         "  <key id=\"caution\" for=\"graph\" attr.name=\"caution\" attr.type=\"string\"/>\n"
         "  <graph id=\"composition\" edgedefault=\"undirected\">\n";
  out << "    <data key=\"threshold\">" << fmt(g.threshold) << "</data>\n";
  out << "    <data key=\"caution\">" << xml_escape(kGraphCaution) << "</data>\n";
  for (const auto& n : g.nodes) {
    out << "    <node id=\"n" << n.row << "\">\n"
        << "      <data key=\"cve_id\">" << xml_escape(n.cve_id) << "</data>\n"
        << "      <data key=\"excerpt\">" << xml_escape(n.excerpt) << "</data>\n"
        << "      <data key=\"degree\">" << n.degree << "</data>\n"
        << "    </node>\n";
  }
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    const auto& e = g.edges[i];
    out << "    <edge id=\"e" << i << "\" source=\"n" << e.a << "\" target=\"n" << e.b << "\">\n"
        << "      <data key=\"probability\">" << fmt(e.probability) << "</data>\n"
        << "    </edge>\n";
  }
  out << "  </graph>\n</graphml>\n";
}

nlohmann::json to_json(const CompositionGraph& g) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : g.nodes)
    nodes.push_back({{"row", n.row}, {"cve_id", n.cve_id}, {"excerpt", n.excerpt}, {"degree", n.degree}});
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : g.edges) edges.push_back({{"a", e.a}, {"b", e.b}, {"probability", e.probability}});
  nlohmann::json j = {{"threshold", g.threshold}, {"nodes", nodes}, {"edges", edges}, {"caution", kGraphCaution}};
  if (!g.advisory.empty()) j["advisory"] = g.advisory;
  return j;
}

// ---------------------------------------------------------------------------
// "VTHY": magic, u32 version, u64 model count, then per model: u64 seed,
// i32 epochs, exists network (f64), relation (f64), results, trace, notes.

namespace {

void write_dense_f64(binio::Writer& w, const nn::DenseNet<double>& net) {
  w.u32(static_cast<std::uint32_t>(net.depth()));
  for (const auto& l : net.layers()) {
    w.u8(static_cast<std::uint8_t>(l.activation));
    w.f64(l.dropout);
    w.matrix_f64(l.weight);
    w.matrix_f64(Matrix<double>(l.bias));
  }
}

nn::DenseNet<double> read_dense_f64(binio::Reader& r) {
  const auto depth = r.u32();
  std::vector<nn::DenseLayer<double>> layers;
  for (std::uint32_t i = 0; i < depth; ++i) {
    nn::DenseLayer<double> l;
    const auto act = r.u8();
    if (act > static_cast<std::uint8_t>(nn::Activation::softmax)) throw CorruptionError(r.context() + ": bad activation");
    l.activation = static_cast<nn::Activation>(act);
    l.dropout = r.f64();
    l.weight = r.matrix_f64<double>();
    const Matrix<double> bias = r.matrix_f64<double>();
    if (bias.rows() != 1) throw CorruptionError(r.context() + ": bias must be a single row");
    l.bias = bias.row(0);
    layers.push_back(std::move(l));
  }
  try {
    return nn::DenseNet<double>(std::move(layers));
  } catch (const Error& e) {
    throw CorruptionError(r.context() + ": " + e.what());
  }
}

void write_model(binio::Writer& w, const TheoryModel& m) {
  w.u64(m.seed);
  w.i32(m.epochs);
  write_dense_f64(w, m.exists_net);
  w.matrix_f64(m.relation.w1);
  w.matrix_f64(m.relation.w2);
  w.matrix_f64(Matrix<double>(m.relation.wa));
  w.matrix_f64(Matrix<double>(m.relation.wb));
  w.f64(m.relation.b);
  w.u64(m.results.size());
  for (const auto& r : m.results) {
    w.str(r.id);
    w.f64(r.bound);
    w.f64(r.satisfaction);
    w.u8(r.met);
  }
  w.u64(m.objective_trace.size());
  for (const auto v : m.objective_trace) w.f64(v);
  w.u64(m.notes.size());
  for (const auto& n : m.notes) w.str(n);
}

TheoryModel read_model(binio::Reader& r) {
  TheoryModel m;
  m.seed = r.u64();
  m.epochs = r.i32();
  m.exists_net = read_dense_f64(r);
  m.relation.w1 = r.matrix_f64<double>();
  m.relation.w2 = r.matrix_f64<double>();
  const auto row_vector = [&r]() -> RowVector<double> {
    const Matrix<double> v = r.matrix_f64<double>();
    if (v.rows() != 1) throw CorruptionError(r.context() + ": expected a single row");
    return v.row(0);
  };
  m.relation.wa = row_vector();
  m.relation.wb = row_vector();
  if (m.relation.w1.rows() != m.relation.w2.rows() || m.relation.w1.cols() != m.relation.w2.cols() ||
      m.relation.wa.size() != m.relation.w1.rows() || m.relation.wb.size() != m.relation.w1.rows())
    throw CorruptionError(r.context() + ": co relation blocks disagree in shape");
  m.relation.b = r.f64();
  const auto nr = r.count(21);
  for (std::uint64_t i = 0; i < nr; ++i) {
    AxiomResult a;
    a.id = r.str();
    a.bound = r.f64();
    a.satisfaction = r.f64();
    a.met = r.u8() != 0;
    m.results.push_back(std::move(a));
  }
  const auto nt = r.count(8);
  for (std::uint64_t i = 0; i < nt; ++i) m.objective_trace.push_back(r.f64());
  const auto nn_ = r.count(4);
  for (std::uint64_t i = 0; i < nn_; ++i) m.notes.push_back(r.str());
  return m;
}

}  // namespace

void save_models(const std::filesystem::path& path, const std::vector<TheoryModel>& models) {
  binio::Writer w;
  w.magic("VTHY", kTheoryVersion);
  w.u64(models.size());
  for (const auto& m : models) write_model(w, m);
  binio::write_file_atomic(path, w.take());
}

std::vector<TheoryModel> load_models(const std::filesystem::path& path) {
  const std::string bytes = binio::read_file(path);
  binio::Reader r(bytes, path.string());
  r.expect_magic("VTHY", kTheoryVersion);
  const auto n = r.count(16);
  std::vector<TheoryModel> out;
  for (std::uint64_t i = 0; i < n; ++i) out.push_back(read_model(r));
  if (!r.at_end()) throw CorruptionError(path.string() + ": trailing bytes after models");
  return out;
}

void save_model(const std::filesystem::path& path, const TheoryModel& m) { save_models(path, {m}); }

TheoryModel load_model(const std::filesystem::path& path) {
  auto all = load_models(path);
  if (all.size() != 1) throw FormatError(path.string() + ": expected exactly one model");
  return std::move(all.front());
}

}  // namespace vulnspace::theory
