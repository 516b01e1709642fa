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

// A small theory of vulnerability composition over embedding space.
//
// Sorts: Space (any vector) and Vul (the known rows). Symbols:
//   exists(x)  learnable predicate, an MLP with sigmoid output
//   co(x, y)   learnable relation sigma(f(x,y) + f(y,x)) with
//              f(x,y) = (x'W1)(W2'y) + wa'x + wb'y + b
//   plus(x, y) (x + y) / 2
// Formulas use product t-norm connectives; a universally quantified formula
// is satisfied to the degree of its mean truth value over sampled
// instantiations. Models are fitted by Adam on a bound-aware objective.

#ifndef VULNSPACE_THEORY_HPP
#define VULNSPACE_THEORY_HPP

#include "vulnspace/nn.hpp"
#include "vulnspace/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace vulnspace::theory {

inline constexpr double kImplicationEpsilon = 1e-12;

// Connectives on truth degrees in [0, 1].
inline double t_not(double p) { return 1.0 - p; }
inline double t_and(double a, double b) { return a * b; }
inline double t_or(double a, double b) { return a + b - a * b; }
inline double t_implies(double a, double b) { return std::min(1.0, b / std::max(a, kImplicationEpsilon)); }
inline double t_iff(double a, double b) { return t_implies(a, b) * t_implies(b, a); }

/// Terms over the two bound variables of an instantiation.
enum class Term : std::uint8_t { u, v, plus_uv };

enum class Op : std::uint8_t { constant, exists, co, negation, conjunction, disjunction, implication, equivalence };

struct Formula {
  Op op = Op::constant;
  double value = 0;  // constant
  Term a = Term::u;  // atom arguments
  Term b = Term::v;
  std::vector<Formula> args;

  static Formula constant(double v);
  static Formula exists(Term t);
  static Formula co(Term x, Term y);
  static Formula negation(Formula f);
  static Formula conjunction(Formula l, Formula r);
  static Formula disjunction(Formula l, Formula r);
  static Formula implication(Formula l, Formula r);
  static Formula equivalence(Formula l, Formula r);

  /// Uses variable v (needs pair instantiations).
  bool binary() const;
  std::string to_string() const;
};

/// Rows are instantiations of (u, v); v is empty for unary formulas.
struct Instantiation {
  MatrixXr u;
  MatrixXr v;
  Index size() const { return u.rows(); }
};

/// Meaning of the two learnable symbols.
class Interpretation {
 public:
  virtual ~Interpretation() = default;
  virtual VectorXr exists(const MatrixXr& x) const = 0;
  virtual VectorXr co(const MatrixXr& x, const MatrixXr& y) const = 0;
};

/// Per-instantiation truth degrees.
VectorXr truth_values(const Formula& f, const Interpretation& m, const Instantiation& at);
/// Mean truth degree over the batch.
double soft_satisfaction(const Formula& f, const Interpretation& m, const Instantiation& at);

/// Where an axiom's variables range.
enum class Domain : std::uint8_t { vul, vul_pairs, space_pairs };

struct Axiom {
  std::string id;
  std::string statement;
  Formula formula;
  double bound = 1.0;
  Domain domain = Domain::vul;
  bool structural = false;  // holds by construction; reported as 1.0
  double weight = 1.0;
};

using AxiomSet = std::vector<Axiom>;

/// A1 reflexivity, A2 symmetry, A3 existence of knowns, A4 composition,
/// A5 non-triviality. Unknown ids in `bounds` are rejected.
AxiomSet axiom_library(const std::map<std::string, double>& bounds = {});
nlohmann::json bounds_to_json(const AxiomSet& axioms);
std::map<std::string, double> bounds_from_json(const nlohmann::json& j);

struct CoRelation {
  Matrix<double> w1;  // dim x rank
  Matrix<double> w2;  // dim x rank
  RowVector<double> wa;
  RowVector<double> wb;
  double b = 0;

  static CoRelation init(Index dim, Index rank, std::uint64_t seed);
  Index dim() const { return w1.rows(); }
  Index rank() const { return w1.cols(); }

  /// f(x, y) per row.
  VectorXr half(const MatrixXr& x, const MatrixXr& y) const;
  /// f(x, y) + f(y, x): symmetric bit for bit.
  VectorXr logits(const MatrixXr& x, const MatrixXr& y) const;
  VectorXr operator()(const MatrixXr& x, const MatrixXr& y) const;
};

struct SynthesisConfig {
  int epochs = 400;
  Index batch = 128;
  double learning_rate = 0.01;
  Index rank = 8;  // 0 uses the embedding width
  std::vector<Index> exists_hidden = {32};
  double barrier = 10.0;  // weight of the squared bound violation
  double margin = 0.03;   // training aims this far above each bound
  double perturbation = 0.05;
  Index eval_samples = 1024;
  std::vector<std::uint64_t> seeds = {0, 1, 2};

  nlohmann::json to_json() const;
};

struct AxiomResult {
  std::string id;
  double bound = 0;
  double satisfaction = 0;
  bool met = false;
  bool operator==(const AxiomResult&) const = default;
};

struct TheoryModel : Interpretation {
  nn::DenseNet<double> exists_net;
  CoRelation relation;
  std::vector<AxiomResult> results;
  std::vector<double> objective_trace;
  std::uint64_t seed = 0;
  int epochs = 0;
  std::vector<std::string> notes;

  VectorXr exists(const MatrixXr& x) const override;
  VectorXr co(const MatrixXr& x, const MatrixXr& y) const override;
  const AxiomResult* result(const std::string& id) const;
};

/// Space samples: a row, the average of two rows, or a row plus Gaussian noise.
class SpaceSampler {
 public:
  SpaceSampler(const MatrixXr& rows, double sigma) : rows_(rows), sigma_(sigma) {}
  MatrixXr sample(Index n, std::mt19937_64& rng) const;

 private:
  const MatrixXr& rows_;
  double sigma_;
};

/// Fixed, seeded instantiation of `domain` over `x`.
Instantiation instantiate(Domain domain, const MatrixXr& x, Index samples, double perturbation, std::mt19937_64& rng);

/// Satisfaction of every axiom on seeded evaluation samples.
std::vector<AxiomResult> evaluate_axioms(const Interpretation& m, const AxiomSet& axioms, const MatrixXr& x,
                                         Index samples, double perturbation, std::uint64_t seed);

/// One model per seed in cfg.seeds, fitted concurrently.
std::vector<TheoryModel> synthesize(const MatrixXr& x, const AxiomSet& axioms, const SynthesisConfig& cfg = {});
TheoryModel synthesize_one(const MatrixXr& x, const AxiomSet& axioms, const SynthesisConfig& cfg, std::uint64_t seed);

/// Gradient of a formula's mean satisfaction w.r.t. every model parameter.
struct ModelGradient {
  nn::Gradients<double> exists;
  Matrix<double> w1, w2;
  RowVector<double> wa, wb;
  double b = 0;

  static ModelGradient zeros_like(const TheoryModel& m);
  bool all_finite() const;
};

/// Returns the mean satisfaction and adds scale * d(satisfaction)/d(params) to `grad`.
double satisfaction_gradient(const Formula& f, const TheoryModel& m, const Instantiation& at, double scale,
                             ModelGradient& grad);

struct GraphNode {
  Index row = 0;
  std::string cve_id;
  std::string excerpt;
  int degree = 0;
  bool operator==(const GraphNode&) const = default;
};

struct GraphEdge {
  Index a = 0;  // rows, a < b
  Index b = 0;
  double probability = 0;
  bool operator==(const GraphEdge&) const = default;
};

struct CompositionGraph {
  double threshold = 0;
  std::vector<GraphNode> nodes;  // degree descending, then row
  std::vector<GraphEdge> edges;  // by (a, b)
  std::string advisory;          // set when nothing passes the threshold
  bool operator==(const CompositionGraph&) const = default;
};

/// Shown with every exported graph.
extern const char* const kGraphCaution;

std::string excerpt(const std::string& text, std::size_t max_bytes = 100);

/// Pairs of rows with co >= threshold; keeps the max_nodes highest-degree
/// nodes and the edges among them, then recounts degrees.
CompositionGraph extract_graph(const Interpretation& m, const MatrixXr& x, const std::vector<std::string>& ids,
                               const std::vector<std::string>& descriptions, double threshold, std::size_t max_nodes);
/// Same graph restricted to edges at or above `threshold` (>= the original one).
CompositionGraph filter_graph(const CompositionGraph& g, double threshold);

void write_graphml(std::ostream& out, const CompositionGraph& g);
nlohmann::json to_json(const CompositionGraph& g);

inline constexpr std::uint32_t kTheoryVersion = 1;
void save_model(const std::filesystem::path& path, const TheoryModel& m);
TheoryModel load_model(const std::filesystem::path& path);
void save_models(const std::filesystem::path& path, const std::vector<TheoryModel>& models);
std::vector<TheoryModel> load_models(const std::filesystem::path& path);

}  // namespace vulnspace::theory

#endif  // VULNSPACE_THEORY_HPP
