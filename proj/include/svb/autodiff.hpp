#pragma once

// Scalar reverse-mode automatic differentiation.
//
// A Tape records every scalar operation in evaluation order. Var is a light
// handle onto a tape node and doubles as an Eigen scalar type, so dense
// Eigen expressions over Var build the graph directly. A Var with no tape is
// a plain constant; it is materialised on the tape the first time it meets
// an attached operand.

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace svb::ad {

struct NodeId {
  std::size_t index = 0;
  friend bool operator==(NodeId, NodeId) = default;
};

enum class Op : std::uint8_t {
  Variable,
  Constant,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Log,
  Exp,
  Square,
  Cosh,
  Sum,
};

class Tape;

/// Adjoints of every leaf variable, in registration order.
class Gradient {
 public:
  Gradient(std::vector<NodeId> leaves, Eigen::VectorXd adjoints);

  /// Throws std::out_of_range when `leaf` is not a registered variable.
  [[nodiscard]] double operator[](NodeId leaf) const;
  [[nodiscard]] const Eigen::VectorXd& values() const noexcept { return adjoints_; }
  [[nodiscard]] const std::vector<NodeId>& leaves() const noexcept { return leaves_; }
  [[nodiscard]] std::size_t size() const noexcept { return leaves_.size(); }

 private:
  std::vector<NodeId> leaves_;
  Eigen::VectorXd adjoints_;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  /// Registers a differentiable leaf. Throws std::domain_error if not finite.
  NodeId variable(double value);
  NodeId constant(double value);

  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId div(NodeId a, NodeId b);
  NodeId neg(NodeId a);
  NodeId log(NodeId a);
  NodeId exp(NodeId a);
  NodeId square(NodeId a);
  NodeId cosh(NodeId a);
  /// n-ary sum recorded as a single node.
  NodeId sum_many(std::span<const NodeId> operands);

  [[nodiscard]] double value(NodeId id) const;
  [[nodiscard]] Op op(NodeId id) const;
  [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
  [[nodiscard]] const std::vector<NodeId>& leaves() const noexcept { return leaves_; }

  /// One reverse sweep from `output`; fan-out contributions accumulate.
  [[nodiscard]] Gradient grad(NodeId output) const;

 private:
  struct Node {
    Op op;
    std::uint32_t lhs;  // Sum: offset into operands_
    std::uint32_t rhs;  // Sum: operand count
    double value;
  };

  NodeId push(Op op, std::uint32_t lhs, std::uint32_t rhs, double value);
  void check(NodeId id) const;

  std::vector<Node> nodes_;
  std::vector<std::uint32_t> operands_;
  std::vector<NodeId> leaves_;
};

class Var {
 public:
  Var() = default;
  Var(double value) : value_(value) {}  // NOLINT: implicit constant lift
  Var(Tape& tape, NodeId id) : tape_(&tape), id_(id), value_(tape.value(id)) {}

  [[nodiscard]] double value() const noexcept { return value_; }
  [[nodiscard]] bool attached() const noexcept { return tape_ != nullptr; }
  [[nodiscard]] Tape* tape() const noexcept { return tape_; }
  /// Node id on `tape`, materialising a constant when detached.
  [[nodiscard]] NodeId node(Tape& tape) const;
  [[nodiscard]] NodeId id() const noexcept { return id_; }

  Var& operator+=(const Var& rhs);
  Var& operator-=(const Var& rhs);
  Var& operator*=(const Var& rhs);
  Var& operator/=(const Var& rhs);

 private:
  Tape* tape_ = nullptr;
  NodeId id_{};
  double value_ = 0.0;
};

/// New leaf variable on `tape`.
[[nodiscard]] Var variable(Tape& tape, double value);

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);

Var log(const Var& a);
Var exp(const Var& a);
Var square(const Var& a);
Var cosh(const Var& a);
Var sum_many(std::span<const Var> terms);

// Value comparisons; they do not record anything.
inline bool operator<(const Var& a, const Var& b) { return a.value() < b.value(); }
inline bool operator>(const Var& a, const Var& b) { return a.value() > b.value(); }
inline bool operator<=(const Var& a, const Var& b) { return a.value() <= b.value(); }
inline bool operator>=(const Var& a, const Var& b) { return a.value() >= b.value(); }
inline bool operator==(const Var& a, const Var& b) { return a.value() == b.value(); }
inline bool operator!=(const Var& a, const Var& b) { return a.value() != b.value(); }

/// Gradient of `output` with respect to every leaf of its tape.
[[nodiscard]] Gradient grad(const Var& output);

// Plain-number overloads so scalar-templated code can be written once.
inline double square(double x) { return x * x; }
inline double sum_many(std::span<const double> terms) {
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}
inline double value_of(double x) { return x; }
inline double value_of(const Var& x) { return x.value(); }

using TapeFunction = std::function<Var(std::span<const Var>)>;

struct FiniteDiffReport {
  bool passed = false;
  double max_rel_error = 0.0;
  Eigen::VectorXd ad;
  Eigen::VectorXd fd;
  /// Coordinates where f could not be evaluated at x +/- h.
  std::vector<std::size_t> unevaluable;
};

/// Compares reverse-mode gradients of `f` at `at` against central
/// differences with step h = 1e-6 * max(1, |x_i|). The relative error of a
/// coordinate is |ad - fd| / max(|ad|, |fd|, scale_floor).
[[nodiscard]] FiniteDiffReport finite_diff_check(const TapeFunction& f,
                                                 const Eigen::VectorXd& at, double rtol,
                                                 double scale_floor = 1e-3);

}  // namespace svb::ad

namespace Eigen {

template <>
struct NumTraits<svb::ad::Var> : NumTraits<double> {
  using Real = svb::ad::Var;
  using NonInteger = svb::ad::Var;
  using Nested = svb::ad::Var;
  using Literal = svb::ad::Var;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 1,
    AddCost = 3,
    MulCost = 3,
  };
};

template <typename BinaryOp>
struct ScalarBinaryOpTraits<svb::ad::Var, double, BinaryOp> {
  using ReturnType = svb::ad::Var;
};
template <typename BinaryOp>
struct ScalarBinaryOpTraits<double, svb::ad::Var, BinaryOp> {
  using ReturnType = svb::ad::Var;
};

}  // namespace Eigen
