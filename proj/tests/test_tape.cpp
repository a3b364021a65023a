#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "wordimp/rng.hpp"
#include "wordimp/tape.hpp"

using wordimp::Rng;
using namespace wordimp::ad;

namespace {

Matrix random_matrix(Rng& rng, int r, int c) {
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.gaussian();
  return m;
}

// Central finite difference of scalar(inputs) w.r.t. inputs[which].
Matrix fd_grad(const std::function<double(const std::vector<Matrix>&)>& f,
               std::vector<Matrix> inputs, size_t which, double h = 1e-5) {
  Matrix g(inputs[which].rows(), inputs[which].cols());
  for (int i = 0; i < g.rows(); ++i)
    for (int j = 0; j < g.cols(); ++j) {
      inputs[which](i, j) += h;
      double up = f(inputs);
      inputs[which](i, j) -= 2 * h;
      double down = f(inputs);
      inputs[which](i, j) += h;
      g(i, j) = (up - down) / (2 * h);
    }
  return g;
}

// Scalarizes a graph output by summing, for gradient checking.
template <typename Builder>
void check_grads(Builder build, const std::vector<Matrix>& inputs,
                 double tol = 1e-6) {
  auto scalar = [&build](const std::vector<Matrix>& xs) {
    Tape t;
    std::vector<Var> vars;
    for (const auto& x : xs) vars.push_back(t.input(x));
    Var out = t.sum(build(t, vars));
    return out.value()(0, 0);
  };
  Tape t;
  std::vector<Var> vars;
  for (const auto& x : inputs) vars.push_back(t.input(x));
  Var out = t.sum(build(t, vars));
  t.backward(out);
  for (size_t k = 0; k < inputs.size(); ++k) {
    Matrix expect = fd_grad(scalar, inputs, k);
    CHECK((vars[k].grad() - expect).cwiseAbs().maxCoeff() < tol);
  }
}

}  // namespace

TEST_CASE("matmul forward and gradient") {
  Rng rng(1);
  auto a = random_matrix(rng, 3, 4), b = random_matrix(rng, 4, 2);
  check_grads([](Tape& t, std::vector<Var>& v) { return t.matmul(v[0], v[1]); },
              {a, b});
}

TEST_CASE("matmul_nt equals matmul with explicit transpose") {
  Rng rng(2);
  auto a = random_matrix(rng, 3, 4), b = random_matrix(rng, 5, 4);
  Tape t;
  Var out = t.matmul_nt(t.input(a), t.input(b));
  CHECK((out.value() - a * b.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  check_grads(
      [](Tape& t, std::vector<Var>& v) { return t.matmul_nt(v[0], v[1]); },
      {a, b});
}

TEST_CASE("elementwise and structural op gradients") {
  Rng rng(3);
  auto a = random_matrix(rng, 4, 3);
  auto row = random_matrix(rng, 1, 3);
  auto c = random_matrix(rng, 4, 3);

  check_grads([&](Tape& t, std::vector<Var>& v) { return t.tanh(v[0]); }, {a});
  check_grads(
      [&](Tape& t, std::vector<Var>& v) { return t.add_rowvec(v[0], v[1]); },
      {a, row});
  check_grads(
      [&](Tape& t, std::vector<Var>& v) { return t.cwise_mul_const(v[0], c); },
      {a});
  check_grads([&](Tape& t, std::vector<Var>& v) { return t.scale(v[0], -2.5); },
              {a});
  check_grads(
      [&](Tape& t, std::vector<Var>& v) {
        return t.gather_rows(v[0], {2, 0, 2});
      },
      {a});
  check_grads(
      [&](Tape& t, std::vector<Var>& v) { return t.vconcat(v[0], v[1]); },
      {a, c});
}

TEST_CASE("softmax rows: values and gradient") {
  Matrix x(1, 2);
  x << 0.0, std::log(3.0);  // softmax = (0.25, 0.75)
  Tape t;
  Var s = t.softmax_rows(t.input(x));
  CHECK(s.value()(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(s.value()(0, 1) == doctest::Approx(0.75).epsilon(1e-12));

  Rng rng(4);
  auto a = random_matrix(rng, 3, 5);
  check_grads(
      [](Tape& t, std::vector<Var>& v) {
        // Compose with log+pick so the gradient is not uniform.
        return t.log(t.softmax_rows(v[0]));
      },
      {a});
}

TEST_CASE("softmax rows is shift-invariant (stable)") {
  Matrix x(1, 3);
  x << 1000.0, 1001.0, 999.0;
  Tape t;
  Var s = t.softmax_rows(t.input(x));
  CHECK(s.value().sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::isfinite(s.value().maxCoeff()));
}

TEST_CASE("pick and log gradients") {
  Matrix x(2, 3);
  x << 0.2, 0.5, 0.3, 0.1, 0.8, 0.1;
  check_grads(
      [](Tape& t, std::vector<Var>& v) {
        return t.log(t.pick(v[0], {{0, 1}, {1, 2}}));
      },
      {x});
}

TEST_CASE("backward seeds a single output cell") {
  Matrix x(2, 2);
  x << 1, 2, 3, 4;
  Tape t;
  Var a = t.input(x);
  Var y = t.scale(a, 3.0);
  t.backward(y, 1, 0);
  Matrix expect = Matrix::Zero(2, 2);
  expect(1, 0) = 3.0;
  CHECK((a.grad() - expect).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("zero_grad resets accumulated adjoints") {
  Matrix x = Matrix::Ones(2, 2);
  Tape t;
  Var a = t.input(x);
  Var y = t.sum(a);
  t.backward(y);
  CHECK(a.grad()(0, 0) == 1.0);
  t.zero_grad();
  CHECK(a.grad().cwiseAbs().maxCoeff() == 0.0);
  t.backward(y);
  CHECK(a.grad()(0, 0) == 1.0);
}

TEST_CASE("a deep composed graph matches finite differences") {
  Rng rng(5);
  auto x = random_matrix(rng, 3, 4);
  auto w1 = random_matrix(rng, 4, 4);
  auto w2 = random_matrix(rng, 4, 2);
  check_grads(
      [](Tape& t, std::vector<Var>& v) {
        Var h = t.tanh(t.matmul(v[0], v[1]));
        Var p = t.softmax_rows(t.matmul(h, v[2]));
        return t.log(t.pick(p, {{0, 0}, {1, 1}, {2, 0}}));
      },
      {x, w1, w2}, 1e-5);
}
