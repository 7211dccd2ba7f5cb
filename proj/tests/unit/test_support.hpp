#pragma once

#include "drdcbf/output_chain.hpp"

#include <functional>

namespace drdcbf::test {

/// Chain controller returning a fixed value.
class ConstantChain final : public ChainController {
 public:
  ConstantChain(int dim, Vec value) : dim_(dim), value_(std::move(value)) {}
  int dim() const override { return dim_; }
  int output_dim() const override { return static_cast<int>(value_.size()); }
  Vec evaluate(const Vec&) const override { return value_; }
  Mat jacobian(const Vec&) const override { return Mat::Zero(value_.size(), dim_); }

 private:
  int dim_;
  Vec value_;
};

inline Vec vec(std::initializer_list<double> values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x,
                       double h = 1e-6) {
  Vec g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    g[j] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double h = 1e-6) {
  const Vec f0 = f(x);
  Mat jac(f0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    jac.col(j) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return jac;
}

}  // namespace drdcbf::test
