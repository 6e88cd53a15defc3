#pragma once
// Dense row-major float64 tensor. Rank 1 and 2 cover the whole model;
// scalars are 1-element vectors.

#include <cassert>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "pathmind/util.hpp"

namespace pathmind {

struct Tensor {
  std::vector<size_t> shape;
  std::vector<double> data;

  Tensor() = default;

  explicit Tensor(std::vector<size_t> s) : shape(std::move(s)) {
    data.assign(numel(shape), 0.0);
  }

  Tensor(std::vector<size_t> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != numel(shape)) throw Error("tensor: data length does not match shape");
  }

  static size_t numel(const std::vector<size_t>& s) {
    size_t n = 1;
    for (size_t dim : s) n *= dim;
    return n;
  }

  static Tensor vec(std::vector<double> d) {
    size_t n = d.size();
    return Tensor({n}, std::move(d));
  }

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  static Tensor zeros(std::vector<size_t> s) { return Tensor(std::move(s)); }

  size_t size() const { return data.size(); }
  size_t rank() const { return shape.size(); }
  bool empty() const { return data.empty(); }

  double& operator[](size_t i) { return data[i]; }
  double operator[](size_t i) const { return data[i]; }

  // 2-D access, row-major
  double& at(size_t r, size_t c) { return data[r * shape[1] + c]; }
  double at(size_t r, size_t c) const { return data[r * shape[1] + c]; }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  std::string shape_str() const {
    std::string s = "[";
    for (size_t i = 0; i < shape.size(); ++i) {
      if (i) s += "x";
      s += std::to_string(shape[i]);
    }
    return s + "]";
  }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  double l2_norm() const {
    double s = 0.0;
    for (double v : data) s += v * v;
    return std::sqrt(s);
  }
};

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw Error(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

#ifndef NDEBUG
inline void debug_check_finite(const Tensor& t, const char* op) {
  if (!t.all_finite()) throw Error(std::string(op) + ": non-finite value");
}
#else
inline void debug_check_finite(const Tensor&, const char*) {}
#endif

// Standalone elementwise ops. The tape mirrors these; keeping the arithmetic
// here lets oracles and non-trained paths share one definition.

inline Tensor matvec(const Tensor& w, const Tensor& x) {
  if (w.rank() != 2 || x.rank() != 1 || w.shape[1] != x.shape[0])
    throw Error("matvec: shape mismatch " + w.shape_str() + " vs " + x.shape_str());
  Tensor out({w.shape[0]});
  for (size_t r = 0; r < w.shape[0]; ++r) {
    double acc = 0.0;
    const double* row = &w.data[r * w.shape[1]];
    for (size_t c = 0; c < w.shape[1]; ++c) acc += row[c] * x.data[c];
    out.data[r] = acc;
  }
  debug_check_finite(out, "matvec");
  return out;
}

inline Tensor hadamard(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "hadamard");
  Tensor out(a.shape);
  for (size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] * b.data[i];
  return out;
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  Tensor out(a.shape);
  for (size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] + b.data[i];
  return out;
}

inline Tensor concat(const Tensor& a, const Tensor& b) {
  if (a.rank() != 1 || b.rank() != 1) throw Error("concat: rank-1 tensors required");
  Tensor out({a.size() + b.size()});
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(), out.data.begin() + std::ptrdiff_t(a.size()));
  return out;
}

inline Tensor relu(const Tensor& x) {
  Tensor out(x.shape);
  for (size_t i = 0; i < x.size(); ++i) out.data[i] = x.data[i] > 0.0 ? x.data[i] : 0.0;
  return out;
}

inline Tensor sigmoid(const Tensor& x) {
  Tensor out(x.shape);
  for (size_t i = 0; i < x.size(); ++i) {
    double v = 1.0 / (1.0 + std::exp(-x.data[i]));
    // the exact function never reaches 0 or 1; keep rounding from doing so
    if (v >= 1.0) v = std::nextafter(1.0, 0.0);
    if (v <= 0.0) v = std::nextafter(0.0, 1.0);
    out.data[i] = v;
  }
  return out;
}

inline Tensor scale(const Tensor& x, double c) {
  Tensor out(x.shape);
  for (size_t i = 0; i < x.size(); ++i) out.data[i] = c * x.data[i];
  return out;
}

inline double dot(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "dot");
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a.data[i] * b.data[i];
  return s;
}

inline double sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data) s += v;
  return s;
}

}  // namespace pathmind
