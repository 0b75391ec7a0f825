#pragma once

// Outer maps for cylinder functions: a small expression tree over k variables
// with exact gradient and Hessian, so the chain-rule comparisons downstream
// are free of finite-difference noise. Trees serialize to JSON.

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "upsilon/config_space.hpp"

namespace upsilon {

struct OuterEval {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

class Outer {
 public:
  OuterEval eval(const Eigen::VectorXd& x) const {
    if (!root_) throw std::runtime_error("empty outer expression");
    return root_->eval(x);
  }

  double value(const Eigen::VectorXd& x) const { return eval(x).value; }
  int max_var() const { return root_ ? root_->max_var() : -1; }

  static Outer constant(double c) { return Outer(std::make_shared<Const>(c)); }
  static Outer var(int index) {
    if (index < 0) throw std::invalid_argument("variable index must be >= 0");
    return Outer(std::make_shared<Var>(index));
  }
  static Outer exp(Outer a) { return Outer(std::make_shared<Exp>(std::move(a.root_))); }
  static Outer log(Outer a) { return Outer(std::make_shared<Log>(std::move(a.root_))); }
  // a * child + b
  static Outer affine(double a, double b, Outer child) {
    return Outer(std::make_shared<Affine>(a, b, std::move(child.root_)));
  }

  friend Outer operator+(Outer a, Outer b) {
    return Outer(std::make_shared<Add>(std::move(a.root_), std::move(b.root_)));
  }
  friend Outer operator*(Outer a, Outer b) {
    return Outer(std::make_shared<Mul>(std::move(a.root_), std::move(b.root_)));
  }

  nlohmann::json to_json() const { return root_->to_json(); }
  static Outer from_json(const nlohmann::json& j);

 private:
  struct Node {
    virtual ~Node() = default;
    virtual OuterEval eval(const Eigen::VectorXd& x) const = 0;
    virtual int max_var() const = 0;
    virtual nlohmann::json to_json() const = 0;
  };
  using NodePtr = std::shared_ptr<const Node>;

  static OuterEval zero_eval(int k) {
    OuterEval e;
    e.grad = Eigen::VectorXd::Zero(k);
    e.hess = Eigen::MatrixXd::Zero(k, k);
    return e;
  }

  struct Const final : Node {
    double c;
    explicit Const(double c) : c(c) {}
    OuterEval eval(const Eigen::VectorXd& x) const override {
      auto e = zero_eval(static_cast<int>(x.size()));
      e.value = c;
      return e;
    }
    int max_var() const override { return -1; }
    nlohmann::json to_json() const override { return {{"op", "const"}, {"value", c}}; }
  };

  struct Var final : Node {
    int index;
    explicit Var(int i) : index(i) {}
    OuterEval eval(const Eigen::VectorXd& x) const override {
      if (index >= x.size()) throw std::invalid_argument("outer: variable index out of range");
      auto e = zero_eval(static_cast<int>(x.size()));
      e.value = x(index);
      e.grad(index) = 1.0;
      return e;
    }
    int max_var() const override { return index; }
    nlohmann::json to_json() const override { return {{"op", "var"}, {"index", index}}; }
  };

  struct Add final : Node {
    NodePtr a, b;
    Add(NodePtr a, NodePtr b) : a(std::move(a)), b(std::move(b)) {}
    OuterEval eval(const Eigen::VectorXd& x) const override {
      auto ea = a->eval(x);
      const auto eb = b->eval(x);
      ea.value += eb.value;
      ea.grad += eb.grad;
      ea.hess += eb.hess;
      return ea;
    }
    int max_var() const override { return std::max(a->max_var(), b->max_var()); }
    nlohmann::json to_json() const override {
      return {{"op", "add"}, {"args", nlohmann::json::array({a->to_json(), b->to_json()})}};
    }
  };

  struct Mul final : Node {
    NodePtr a, b;
    Mul(NodePtr a, NodePtr b) : a(std::move(a)), b(std::move(b)) {}
    OuterEval eval(const Eigen::VectorXd& x) const override {
      const auto ea = a->eval(x);
      const auto eb = b->eval(x);
      OuterEval e;
      e.value = ea.value * eb.value;
      e.grad = ea.grad * eb.value + eb.grad * ea.value;
      e.hess = ea.hess * eb.value + eb.hess * ea.value + ea.grad * eb.grad.transpose() +
               eb.grad * ea.grad.transpose();
      return e;
    }
    int max_var() const override { return std::max(a->max_var(), b->max_var()); }
    nlohmann::json to_json() const override {
      return {{"op", "mul"}, {"args", nlohmann::json::array({a->to_json(), b->to_json()})}};
    }
  };

  struct Exp final : Node {
    NodePtr a;
    explicit Exp(NodePtr a) : a(std::move(a)) {}
    OuterEval eval(const Eigen::VectorXd& x) const override {
      const auto ea = a->eval(x);
      OuterEval e;
      e.value = std::exp(ea.value);
      e.grad = e.value * ea.grad;
      e.hess = e.value * (ea.grad * ea.grad.transpose() + ea.hess);
      return e;
    }
    int max_var() const override { return a->max_var(); }
    nlohmann::json to_json() const override { return {{"op", "exp"}, {"arg", a->to_json()}}; }
  };

  struct Log final : Node {
    NodePtr a;
    explicit Log(NodePtr a) : a(std::move(a)) {}
    OuterEval eval(const Eigen::VectorXd& x) const override {
      const auto ea = a->eval(x);
      if (!(ea.value > 0.0))
        throw std::domain_error("outer: log of nonpositive argument");
      OuterEval e;
      e.value = std::log(ea.value);
      e.grad = ea.grad / ea.value;
      e.hess = ea.hess / ea.value - (ea.grad * ea.grad.transpose()) / (ea.value * ea.value);
      return e;
    }
    int max_var() const override { return a->max_var(); }
    nlohmann::json to_json() const override { return {{"op", "log"}, {"arg", a->to_json()}}; }
  };

  struct Affine final : Node {
    double a, b;
    NodePtr child;
    Affine(double a, double b, NodePtr child) : a(a), b(b), child(std::move(child)) {}
    OuterEval eval(const Eigen::VectorXd& x) const override {
      auto e = child->eval(x);
      e.value = a * e.value + b;
      e.grad *= a;
      e.hess *= a;
      return e;
    }
    int max_var() const override { return child->max_var(); }
    nlohmann::json to_json() const override {
      return {{"op", "affine"}, {"a", a}, {"b", b}, {"arg", child->to_json()}};
    }
  };

  explicit Outer(NodePtr root) : root_(std::move(root)) {}
  NodePtr root_;
};

inline Outer Outer::from_json(const nlohmann::json& j) {
  const std::string op = j.at("op").get<std::string>();
  if (op == "const") return constant(j.at("value").get<double>());
  if (op == "var") return var(j.at("index").get<int>());
  if (op == "add") return from_json(j.at("args").at(0)) + from_json(j.at("args").at(1));
  if (op == "mul") return from_json(j.at("args").at(0)) * from_json(j.at("args").at(1));
  if (op == "exp") return exp(from_json(j.at("arg")));
  if (op == "log") return log(from_json(j.at("arg")));
  if (op == "affine")
    return affine(j.at("a").get<double>(), j.at("b").get<double>(), from_json(j.at("arg")));
  throw std::invalid_argument("unknown outer op: " + op);
}

// u = F(f_1* gamma, ..., f_k* gamma)
struct CylinderFunction {
  std::vector<BaseFunction> inner;
  Outer outer;

  void validate(int base_size) const {
    for (const auto& f : inner)
      if (f.size() != base_size)
        throw std::invalid_argument("cylinder inner function dimension mismatch");
    if (outer.max_var() >= static_cast<int>(inner.size()))
      throw std::invalid_argument("outer references a missing inner function");
  }

  Eigen::VectorXd star_values(const Configuration& gamma) const {
    Eigen::VectorXd x(inner.size());
    for (std::size_t i = 0; i < inner.size(); ++i) x(static_cast<int>(i)) = star(inner[i], gamma);
    return x;
  }

  double value(const Configuration& gamma) const { return outer.value(star_values(gamma)); }
};

inline nlohmann::json to_json(const CylinderFunction& c) {
  nlohmann::json j;
  nlohmann::json inner = nlohmann::json::array();
  for (const auto& f : c.inner)
    inner.push_back(std::vector<double>(f.data(), f.data() + f.size()));
  j["inner"] = inner;
  j["outer"] = c.outer.to_json();
  return j;
}

inline CylinderFunction cylinder_from_json(const nlohmann::json& j) {
  CylinderFunction c{{}, Outer::from_json(j.at("outer"))};
  for (const auto& fj : j.at("inner")) {
    const auto v = fj.get<std::vector<double>>();
    c.inner.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()));
  }
  return c;
}

// gamma -> prod_x (1+f(x))^{gamma_x} = exp(log(1+f)* gamma), entries of f > -1
struct ExpCylinder {
  BaseFunction f;

  void validate() const {
    for (int i = 0; i < f.size(); ++i)
      if (!(f(i) > -1.0) || !std::isfinite(f(i)))
        throw std::invalid_argument("exponential cylinder needs entries in (-1, inf)");
  }

  double value(const Configuration& gamma) const {
    double acc = 1.0;
    for (std::size_t x = 0; x < gamma.occupation.size(); ++x)
      for (int k = 0; k < gamma.occupation[x]; ++k) acc *= 1.0 + f(static_cast<int>(x));
    return acc;
  }
};

inline ConfigFunction tabulate(const ConfigSpace& cs, const CylinderFunction& c) {
  c.validate(cs.base().size());
  ConfigFunction u(cs.size());
  for (int i = 0; i < cs.size(); ++i) u(i) = c.value(cs.config(i));
  return u;
}

inline ConfigFunction tabulate(const ConfigSpace& cs, const ExpCylinder& e) {
  e.validate();
  ConfigFunction u(cs.size());
  for (int i = 0; i < cs.size(); ++i) u(i) = e.value(cs.config(i));
  return u;
}

}  // namespace upsilon
