#include "svb/autodiff.hpp"

#include "svb/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace svb::ad {
namespace {

double finite_or_throw(double value, const char* what) {
  if (!std::isfinite(value)) {
    throw NumericError(std::string("non-finite result in ") + what);
  }
  return value;
}

double eval_unary(Op op, double a) {
  switch (op) {
    case Op::Neg:
      return -a;
    case Op::Log:
      if (!(a > 0.0)) {
        throw std::domain_error("log of non-positive value " + std::to_string(a));
      }
      return finite_or_throw(std::log(a), "log");
    case Op::Exp:
      return finite_or_throw(std::exp(a), "exp");
    case Op::Square:
      return finite_or_throw(a * a, "square");
    case Op::Cosh:
      return finite_or_throw(std::cosh(a), "cosh");
    default:
      throw std::logic_error("not a unary op");
  }
}

double eval_binary(Op op, double a, double b) {
  switch (op) {
    case Op::Add:
      return finite_or_throw(a + b, "add");
    case Op::Sub:
      return finite_or_throw(a - b, "sub");
    case Op::Mul:
      return finite_or_throw(a * b, "mul");
    case Op::Div:
      if (b == 0.0) {
        throw std::domain_error("division by zero");
      }
      return finite_or_throw(a / b, "div");
    default:
      throw std::logic_error("not a binary op");
  }
}

Tape* common_tape(const Var& a, const Var& b) {
  if (a.tape() != nullptr && b.tape() != nullptr && a.tape() != b.tape()) {
    throw std::invalid_argument("operands belong to different tapes");
  }
  return a.tape() != nullptr ? a.tape() : b.tape();
}

Var binary(Op op, const Var& a, const Var& b) {
  Tape* tape = common_tape(a, b);
  if (tape == nullptr) {
    return Var(eval_binary(op, a.value(), b.value()));
  }
  const NodeId lhs = a.node(*tape);
  const NodeId rhs = b.node(*tape);
  NodeId out;
  switch (op) {
    case Op::Add:
      out = tape->add(lhs, rhs);
      break;
    case Op::Sub:
      out = tape->sub(lhs, rhs);
      break;
    case Op::Mul:
      out = tape->mul(lhs, rhs);
      break;
    case Op::Div:
      out = tape->div(lhs, rhs);
      break;
    default:
      throw std::logic_error("not a binary op");
  }
  return Var(*tape, out);
}

Var unary(Op op, const Var& a) {
  Tape* tape = a.tape();
  if (tape == nullptr) {
    return Var(eval_unary(op, a.value()));
  }
  const NodeId in = a.id();
  NodeId out;
  switch (op) {
    case Op::Neg:
      out = tape->neg(in);
      break;
    case Op::Log:
      out = tape->log(in);
      break;
    case Op::Exp:
      out = tape->exp(in);
      break;
    case Op::Square:
      out = tape->square(in);
      break;
    case Op::Cosh:
      out = tape->cosh(in);
      break;
    default:
      throw std::logic_error("not a unary op");
  }
  return Var(*tape, out);
}

}  // namespace

Gradient::Gradient(std::vector<NodeId> leaves, Eigen::VectorXd adjoints)
    : leaves_(std::move(leaves)), adjoints_(std::move(adjoints)) {}

double Gradient::operator[](NodeId leaf) const {
  const auto it = std::find(leaves_.begin(), leaves_.end(), leaf);
  if (it == leaves_.end()) {
    throw std::out_of_range("node " + std::to_string(leaf.index) + " is not a leaf variable");
  }
  return adjoints_[it - leaves_.begin()];
}

NodeId Tape::push(Op op, std::uint32_t lhs, std::uint32_t rhs, double value) {
  nodes_.push_back(Node{op, lhs, rhs, value});
  return NodeId{nodes_.size() - 1};
}

void Tape::check(NodeId id) const {
  if (id.index >= nodes_.size()) {
    throw std::out_of_range("node " + std::to_string(id.index) + " not on tape");
  }
}

NodeId Tape::variable(double value) {
  if (!std::isfinite(value)) {
    throw std::domain_error("variable value must be finite");
  }
  const NodeId id = push(Op::Variable, 0, 0, value);
  leaves_.push_back(id);
  return id;
}

NodeId Tape::constant(double value) {
  if (!std::isfinite(value)) {
    throw std::domain_error("constant value must be finite");
  }
  return push(Op::Constant, 0, 0, value);
}

#define SVB_TAPE_BINARY(name, kind)                                              \
  NodeId Tape::name(NodeId a, NodeId b) {                                        \
    check(a);                                                                    \
    check(b);                                                                    \
    const double v = eval_binary(Op::kind, nodes_[a.index].value, nodes_[b.index].value); \
    return push(Op::kind, static_cast<std::uint32_t>(a.index),                   \
                static_cast<std::uint32_t>(b.index), v);                         \
  }

SVB_TAPE_BINARY(add, Add)
SVB_TAPE_BINARY(sub, Sub)
SVB_TAPE_BINARY(mul, Mul)
SVB_TAPE_BINARY(div, Div)
#undef SVB_TAPE_BINARY

#define SVB_TAPE_UNARY(name, kind)                                           \
  NodeId Tape::name(NodeId a) {                                              \
    check(a);                                                                \
    const double v = eval_unary(Op::kind, nodes_[a.index].value);            \
    return push(Op::kind, static_cast<std::uint32_t>(a.index), 0, v);        \
  }

SVB_TAPE_UNARY(neg, Neg)
SVB_TAPE_UNARY(log, Log)
SVB_TAPE_UNARY(exp, Exp)
SVB_TAPE_UNARY(square, Square)
SVB_TAPE_UNARY(cosh, Cosh)
#undef SVB_TAPE_UNARY

NodeId Tape::sum_many(std::span<const NodeId> operands) {
  if (operands.empty()) {
    return constant(0.0);
  }
  const auto offset = static_cast<std::uint32_t>(operands_.size());
  double total = 0.0;
  for (NodeId id : operands) {
    check(id);
    total += nodes_[id.index].value;
    operands_.push_back(static_cast<std::uint32_t>(id.index));
  }
  return push(Op::Sum, offset, static_cast<std::uint32_t>(operands.size()),
              finite_or_throw(total, "sum"));
}

double Tape::value(NodeId id) const {
  check(id);
  return nodes_[id.index].value;
}

Op Tape::op(NodeId id) const {
  check(id);
  return nodes_[id.index].op;
}

Gradient Tape::grad(NodeId output) const {
  check(output);
  std::vector<double> adjoint(output.index + 1, 0.0);
  adjoint[output.index] = 1.0;

  for (std::size_t i = output.index + 1; i-- > 0;) {
    const double g = adjoint[i];
    if (g == 0.0) continue;
    const Node& n = nodes_[i];
    switch (n.op) {
      case Op::Variable:
      case Op::Constant:
        break;
      case Op::Add:
        adjoint[n.lhs] += g;
        adjoint[n.rhs] += g;
        break;
      case Op::Sub:
        adjoint[n.lhs] += g;
        adjoint[n.rhs] -= g;
        break;
      case Op::Mul:
        adjoint[n.lhs] += g * nodes_[n.rhs].value;
        adjoint[n.rhs] += g * nodes_[n.lhs].value;
        break;
      case Op::Div: {
        const double b = nodes_[n.rhs].value;
        adjoint[n.lhs] += g / b;
        adjoint[n.rhs] -= g * n.value / b;
        break;
      }
      case Op::Neg:
        adjoint[n.lhs] -= g;
        break;
      case Op::Log:
        adjoint[n.lhs] += g / nodes_[n.lhs].value;
        break;
      case Op::Exp:
        adjoint[n.lhs] += g * n.value;
        break;
      case Op::Square:
        adjoint[n.lhs] += 2.0 * g * nodes_[n.lhs].value;
        break;
      case Op::Cosh:
        adjoint[n.lhs] += g * std::sinh(nodes_[n.lhs].value);
        break;
      case Op::Sum:
        for (std::uint32_t k = 0; k < n.rhs; ++k) {
          adjoint[operands_[n.lhs + k]] += g;
        }
        break;
    }
  }

  Eigen::VectorXd out(static_cast<Eigen::Index>(leaves_.size()));
  for (std::size_t k = 0; k < leaves_.size(); ++k) {
    const std::size_t idx = leaves_[k].index;
    out[static_cast<Eigen::Index>(k)] = idx <= output.index ? adjoint[idx] : 0.0;
  }
  return Gradient(leaves_, std::move(out));
}

NodeId Var::node(Tape& tape) const {
  if (tape_ == nullptr) {
    return tape.constant(value_);
  }
  if (tape_ != &tape) {
    throw std::invalid_argument("variable belongs to a different tape");
  }
  return id_;
}

Var& Var::operator+=(const Var& rhs) { return *this = *this + rhs; }
Var& Var::operator-=(const Var& rhs) { return *this = *this - rhs; }
Var& Var::operator*=(const Var& rhs) { return *this = *this * rhs; }
Var& Var::operator/=(const Var& rhs) { return *this = *this / rhs; }

Var variable(Tape& tape, double value) { return Var(tape, tape.variable(value)); }

Var operator+(const Var& a, const Var& b) { return binary(Op::Add, a, b); }
Var operator-(const Var& a, const Var& b) { return binary(Op::Sub, a, b); }
Var operator*(const Var& a, const Var& b) { return binary(Op::Mul, a, b); }
Var operator/(const Var& a, const Var& b) { return binary(Op::Div, a, b); }
Var operator-(const Var& a) { return unary(Op::Neg, a); }

Var log(const Var& a) { return unary(Op::Log, a); }
Var exp(const Var& a) { return unary(Op::Exp, a); }
Var square(const Var& a) { return unary(Op::Square, a); }
Var cosh(const Var& a) { return unary(Op::Cosh, a); }

Var sum_many(std::span<const Var> terms) {
  Tape* tape = nullptr;
  for (const Var& t : terms) {
    if (t.tape() == nullptr) continue;
    if (tape != nullptr && tape != t.tape()) {
      throw std::invalid_argument("operands belong to different tapes");
    }
    tape = t.tape();
  }
  if (tape == nullptr) {
    double total = 0.0;
    for (const Var& t : terms) total += t.value();
    return Var(finite_or_throw(total, "sum"));
  }
  std::vector<NodeId> ids;
  ids.reserve(terms.size());
  for (const Var& t : terms) ids.push_back(t.node(*tape));
  return Var(*tape, tape->sum_many(ids));
}

Gradient grad(const Var& output) {
  if (output.tape() == nullptr) {
    throw std::invalid_argument("grad of a detached constant");
  }
  return output.tape()->grad(output.id());
}

FiniteDiffReport finite_diff_check(const TapeFunction& f, const Eigen::VectorXd& at,
                                   double rtol, double scale_floor) {
  const Eigen::Index n = at.size();
  FiniteDiffReport report;
  report.ad = Eigen::VectorXd::Zero(n);
  report.fd = Eigen::VectorXd::Zero(n);

  const auto evaluate = [&](const Eigen::VectorXd& x, Eigen::VectorXd* gradient) {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) vars.push_back(variable(tape, x[i]));
    const Var out = f(vars);
    if (gradient != nullptr) {
      if (out.tape() == nullptr) {
        gradient->setZero();
      } else {
        const Gradient g = grad(out);
        for (Eigen::Index i = 0; i < n; ++i) (*gradient)[i] = g[vars[i].id()];
      }
    }
    return out.value();
  };

  evaluate(at, &report.ad);

  bool ok = true;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(at[i]));
    Eigen::VectorXd plus = at;
    Eigen::VectorXd minus = at;
    plus[i] += h;
    minus[i] -= h;
    double fp = 0.0;
    double fm = 0.0;
    try {
      fp = evaluate(plus, nullptr);
      fm = evaluate(minus, nullptr);
    } catch (const std::exception&) {
      report.unevaluable.push_back(static_cast<std::size_t>(i));
      ok = false;
      continue;
    }
    report.fd[i] = (fp - fm) / (2.0 * h);
    const double ad = report.ad[i];
    const double fd = report.fd[i];
    const double denom = std::max({std::abs(ad), std::abs(fd), scale_floor});
    const double err = std::abs(ad - fd) / denom;
    report.max_rel_error = std::max(report.max_rel_error, err);
    if (!(err <= rtol)) ok = false;
  }
  report.passed = ok;
  return report;
}

}  // namespace svb::ad
