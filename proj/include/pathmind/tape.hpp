#pragma once
// Reverse-mode differentiation over a recorded tape with a fixed op set.
// Forward values are computed eagerly as nodes are appended; children always
// precede parents, so backward is a single reverse sweep.
//
// Leaves reference named parameters in a ParamStore; backward accumulates
// d(loss)/d(param) there. Scalars are 1-element tensors.

#include <map>
#include <string>
#include <vector>

#include "pathmind/params.hpp"
#include "pathmind/tensor.hpp"

namespace pathmind {

using NodeId = int;

inline double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

class Tape {
 public:
  explicit Tape(ParamStore& params) : params_(params) {}

  ParamStore& params() { return params_; }

  const Tensor& val(NodeId id) const { return nodes_[size_t(id)].val; }
  size_t size() const { return nodes_.size(); }

  // --- graph construction --------------------------------------------------

  NodeId param(const std::string& name, const std::vector<size_t>& shape, InitKind init) {
    Tensor& t = params_.get_or_create(name, shape, init);
    Node n;
    n.op = Op::kParam;
    n.param_name = name;
    n.val = t;
    return push(std::move(n));
  }

  NodeId constant(Tensor t) {
    Node n;
    n.op = Op::kConst;
    n.val = std::move(t);
    return push(std::move(n));
  }

  NodeId zeros(std::vector<size_t> shape) { return constant(Tensor(std::move(shape))); }

  NodeId matvec(NodeId w, NodeId x) {
    Node n;
    n.op = Op::kMatvec;
    n.a = w;
    n.b = x;
    n.val = pathmind::matvec(val(w), val(x));
    return push(std::move(n));
  }

  NodeId hadamard(NodeId a, NodeId b) {
    Node n;
    n.op = Op::kHadamard;
    n.a = a;
    n.b = b;
    n.val = pathmind::hadamard(val(a), val(b));
    return push(std::move(n));
  }

  NodeId add(NodeId a, NodeId b) {
    Node n;
    n.op = Op::kAdd;
    n.a = a;
    n.b = b;
    n.val = pathmind::add(val(a), val(b));
    return push(std::move(n));
  }

  NodeId add_many(const std::vector<NodeId>& terms) {
    if (terms.empty()) throw Error("tape: add_many with no terms");
    if (terms.size() == 1) return terms[0];
    Node n;
    n.op = Op::kAddN;
    n.many = terms;
    Tensor acc = val(terms[0]);
    for (size_t i = 1; i < terms.size(); ++i) {
      check_same_shape(acc, val(terms[i]), "add_many");
      for (size_t j = 0; j < acc.size(); ++j) acc.data[j] += val(terms[i]).data[j];
    }
    n.val = std::move(acc);
    return push(std::move(n));
  }

  // y = alpha * x + beta, elementwise with scalar constants
  NodeId affine(NodeId x, double alpha, double beta) {
    Node n;
    n.op = Op::kAffine;
    n.a = x;
    n.alpha = alpha;
    n.beta = beta;
    n.val = Tensor(val(x).shape);
    for (size_t i = 0; i < n.val.size(); ++i) n.val.data[i] = alpha * val(x).data[i] + beta;
    return push(std::move(n));
  }

  NodeId scale(NodeId x, double c) { return affine(x, c, 0.0); }

  // scalar node times vector node
  NodeId smul(NodeId s, NodeId x) {
    if (val(s).size() != 1) throw Error("tape: smul expects scalar first operand");
    Node n;
    n.op = Op::kSmul;
    n.a = s;
    n.b = x;
    n.val = pathmind::scale(val(x), val(s).data[0]);
    return push(std::move(n));
  }

  NodeId concat(NodeId a, NodeId b) {
    Node n;
    n.op = Op::kConcat;
    n.a = a;
    n.b = b;
    n.val = pathmind::concat(val(a), val(b));
    return push(std::move(n));
  }

  NodeId relu(NodeId x) {
    Node n;
    n.op = Op::kRelu;
    n.a = x;
    n.val = pathmind::relu(val(x));
    return push(std::move(n));
  }

  NodeId sigmoid(NodeId x) {
    Node n;
    n.op = Op::kSigmoid;
    n.a = x;
    n.val = pathmind::sigmoid(val(x));
    return push(std::move(n));
  }

  NodeId log(NodeId x) {
    Node n;
    n.op = Op::kLog;
    n.a = x;
    n.val = Tensor(val(x).shape);
    for (size_t i = 0; i < n.val.size(); ++i) n.val.data[i] = std::log(val(x).data[i]);
    return push(std::move(n));
  }

  // log(sigmoid(z)) and log(1 - sigmoid(z)), stable for large |z|
  NodeId log_sigmoid(NodeId z) {
    Node n;
    n.op = Op::kLogSigmoid;
    n.a = z;
    n.val = Tensor(val(z).shape);
    for (size_t i = 0; i < n.val.size(); ++i) n.val.data[i] = -softplus(-val(z).data[i]);
    return push(std::move(n));
  }

  NodeId log_one_minus_sigmoid(NodeId z) {
    Node n;
    n.op = Op::kLogOneMinusSigmoid;
    n.a = z;
    n.val = Tensor(val(z).shape);
    for (size_t i = 0; i < n.val.size(); ++i) n.val.data[i] = -softplus(val(z).data[i]);
    return push(std::move(n));
  }

  NodeId sum_vec(NodeId x) {
    Node n;
    n.op = Op::kSumVec;
    n.a = x;
    n.val = Tensor::scalar(pathmind::sum(val(x)));
    return push(std::move(n));
  }

  NodeId dot(NodeId a, NodeId b) {
    Node n;
    n.op = Op::kDot;
    n.a = a;
    n.b = b;
    n.val = Tensor::scalar(pathmind::dot(val(a), val(b)));
    return push(std::move(n));
  }

  // --- backward --------------------------------------------------------------

  // Accumulates d(loss)/d(param) into the ParamStore for every parameter the
  // loss reaches. Parameters the loss never touches keep zero gradients.
  void backward(NodeId loss) {
    sweep(loss, [this](const std::string& name, const Tensor& g) {
      accumulate(params_.grad(name), g);
    });
    params_.mark_has_grads();
  }

  // Same sweep, but gradients land in a private map. Lets independent
  // backward passes run concurrently against a read-only store.
  std::map<std::string, Tensor> backward_collect(NodeId loss) {
    std::map<std::string, Tensor> grads;
    sweep(loss, [&grads](const std::string& name, const Tensor& g) {
      auto it = grads.find(name);
      if (it == grads.end()) it = grads.emplace(name, Tensor(g.shape)).first;
      accumulate(it->second, g);
    });
    return grads;
  }

 private:
  template <typename Sink>
  void sweep(NodeId loss, Sink&& sink) {
    if (nodes_.empty() || loss < 0 || size_t(loss) >= nodes_.size())
      throw Error("tape: backward without a recorded forward pass");
    if (nodes_[size_t(loss)].val.size() != 1)
      throw Error("tape: backward requires a scalar loss node");

    std::vector<Tensor> adj(nodes_.size());
    adj[size_t(loss)] = Tensor::scalar(1.0);

    for (int i = loss; i >= 0; --i) {
      Node& n = nodes_[size_t(i)];
      Tensor& g = adj[size_t(i)];
      if (g.empty()) continue;
      switch (n.op) {
        case Op::kParam:
          sink(n.param_name, g);
          break;
        case Op::kConst:
          break;
        case Op::kMatvec: {
          const Tensor& w = nodes_[size_t(n.a)].val;
          const Tensor& x = nodes_[size_t(n.b)].val;
          Tensor& gw = adjoint(adj, n.a, w.shape);
          Tensor& gx = adjoint(adj, n.b, x.shape);
          size_t rows = w.shape[0], cols = w.shape[1];
          for (size_t r = 0; r < rows; ++r) {
            double gr = g.data[r];
            if (gr == 0.0) continue;
            double* gw_row = &gw.data[r * cols];
            const double* w_row = &w.data[r * cols];
            for (size_t c = 0; c < cols; ++c) {
              gw_row[c] += gr * x.data[c];
              gx.data[c] += gr * w_row[c];
            }
          }
          break;
        }
        case Op::kHadamard: {
          const Tensor& a = nodes_[size_t(n.a)].val;
          const Tensor& b = nodes_[size_t(n.b)].val;
          Tensor& ga = adjoint(adj, n.a, a.shape);
          Tensor& gb = adjoint(adj, n.b, b.shape);
          for (size_t j = 0; j < g.size(); ++j) {
            ga.data[j] += g.data[j] * b.data[j];
            gb.data[j] += g.data[j] * a.data[j];
          }
          break;
        }
        case Op::kAdd: {
          accumulate(adjoint(adj, n.a, g.shape), g);
          accumulate(adjoint(adj, n.b, g.shape), g);
          break;
        }
        case Op::kAddN: {
          for (NodeId t : n.many) accumulate(adjoint(adj, t, g.shape), g);
          break;
        }
        case Op::kAffine: {
          Tensor& ga = adjoint(adj, n.a, g.shape);
          for (size_t j = 0; j < g.size(); ++j) ga.data[j] += n.alpha * g.data[j];
          break;
        }
        case Op::kSmul: {
          const Tensor& s = nodes_[size_t(n.a)].val;
          const Tensor& x = nodes_[size_t(n.b)].val;
          Tensor& gs = adjoint(adj, n.a, s.shape);
          Tensor& gx = adjoint(adj, n.b, x.shape);
          double acc = 0.0;
          for (size_t j = 0; j < g.size(); ++j) {
            acc += g.data[j] * x.data[j];
            gx.data[j] += s.data[0] * g.data[j];
          }
          gs.data[0] += acc;
          break;
        }
        case Op::kConcat: {
          const Tensor& a = nodes_[size_t(n.a)].val;
          const Tensor& b = nodes_[size_t(n.b)].val;
          Tensor& ga = adjoint(adj, n.a, a.shape);
          Tensor& gb = adjoint(adj, n.b, b.shape);
          for (size_t j = 0; j < a.size(); ++j) ga.data[j] += g.data[j];
          for (size_t j = 0; j < b.size(); ++j) gb.data[j] += g.data[a.size() + j];
          break;
        }
        case Op::kRelu: {
          const Tensor& x = nodes_[size_t(n.a)].val;
          Tensor& gx = adjoint(adj, n.a, x.shape);
          for (size_t j = 0; j < g.size(); ++j)
            if (x.data[j] > 0.0) gx.data[j] += g.data[j];
          break;
        }
        case Op::kSigmoid: {
          Tensor& gx = adjoint(adj, n.a, g.shape);
          for (size_t j = 0; j < g.size(); ++j) {
            double y = n.val.data[j];
            gx.data[j] += g.data[j] * y * (1.0 - y);
          }
          break;
        }
        case Op::kLog: {
          const Tensor& x = nodes_[size_t(n.a)].val;
          Tensor& gx = adjoint(adj, n.a, x.shape);
          for (size_t j = 0; j < g.size(); ++j) gx.data[j] += g.data[j] / x.data[j];
          break;
        }
        case Op::kLogSigmoid: {
          const Tensor& z = nodes_[size_t(n.a)].val;
          Tensor& gz = adjoint(adj, n.a, z.shape);
          for (size_t j = 0; j < g.size(); ++j) {
            double s = 1.0 / (1.0 + std::exp(-z.data[j]));
            gz.data[j] += g.data[j] * (1.0 - s);
          }
          break;
        }
        case Op::kLogOneMinusSigmoid: {
          const Tensor& z = nodes_[size_t(n.a)].val;
          Tensor& gz = adjoint(adj, n.a, z.shape);
          for (size_t j = 0; j < g.size(); ++j) {
            double s = 1.0 / (1.0 + std::exp(-z.data[j]));
            gz.data[j] -= g.data[j] * s;
          }
          break;
        }
        case Op::kSumVec: {
          const Tensor& x = nodes_[size_t(n.a)].val;
          Tensor& gx = adjoint(adj, n.a, x.shape);
          for (size_t j = 0; j < gx.size(); ++j) gx.data[j] += g.data[0];
          break;
        }
        case Op::kDot: {
          const Tensor& a = nodes_[size_t(n.a)].val;
          const Tensor& b = nodes_[size_t(n.b)].val;
          Tensor& ga = adjoint(adj, n.a, a.shape);
          Tensor& gb = adjoint(adj, n.b, b.shape);
          for (size_t j = 0; j < a.size(); ++j) {
            ga.data[j] += g.data[0] * b.data[j];
            gb.data[j] += g.data[0] * a.data[j];
          }
          break;
        }
      }
    }
  }

  enum class Op {
    kParam,
    kConst,
    kMatvec,
    kHadamard,
    kAdd,
    kAddN,
    kAffine,
    kSmul,
    kConcat,
    kRelu,
    kSigmoid,
    kLog,
    kLogSigmoid,
    kLogOneMinusSigmoid,
    kSumVec,
    kDot,
  };

  struct Node {
    Op op;
    NodeId a = -1;
    NodeId b = -1;
    double alpha = 0.0;
    double beta = 0.0;
    std::string param_name;
    std::vector<NodeId> many;
    Tensor val;
  };

  NodeId push(Node n) {
    debug_check_finite(n.val, "tape op");
    nodes_.push_back(std::move(n));
    return NodeId(nodes_.size() - 1);
  }

  static Tensor& adjoint(std::vector<Tensor>& adj, NodeId id, const std::vector<size_t>& shape) {
    Tensor& t = adj[size_t(id)];
    if (t.empty()) t = Tensor(shape);
    return t;
  }

  static void accumulate(Tensor& into, const Tensor& g) {
    for (size_t i = 0; i < g.size(); ++i) into.data[i] += g.data[i];
  }

  ParamStore& params_;
  std::vector<Node> nodes_;
};

}  // namespace pathmind
