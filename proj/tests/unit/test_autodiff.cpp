#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "veil/autodiff.hpp"
#include "veil/errors.hpp"
#include "veil/gradcheck.hpp"

using namespace veil;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) {
    v = rng.uniform(-scale, scale);
  }
  return t;
}

}  // namespace

TEST_CASE("tensor rejects inconsistent shapes") {
  CHECK_THROWS_AS(Tensor({2, 0}), DimensionError);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
  const Tensor m = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m.at(1, 2) == 6.0);
}

TEST_CASE("matmul values and shape errors") {
  Tape tape;
  auto i2 = tape.constant(Tensor::matrix({{1, 0}, {0, 1}}));
  auto m = tape.constant(Tensor::matrix({{1, 2}, {3, 4}}));
  CHECK(tape.value(tape.matmul(i2, m)) == Tensor::matrix({{1, 2}, {3, 4}}));

  auto zero = tape.constant(Tensor::matrix({{0}, {0}}));
  CHECK(tape.value(tape.matmul(m, zero)) == Tensor::matrix({{0}, {0}}));

  auto bad = tape.constant(Tensor({3, 1}));
  try {
    tape.matmul(m, bad);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2x2]") != std::string::npos);
    CHECK(msg.find("[3x1]") != std::string::npos);
  }
}

TEST_CASE("matmul gradients agree with finite differences") {
  Rng rng(11);
  Parameter a("a", random_tensor({3, 4}, rng));
  Parameter b("b", random_tensor({4, 2}, rng));
  Parameter* params[] = {&a, &b};
  auto loss = [&](Tape& t) {
    auto y = t.matmul(t.parameter(a), t.parameter(b));
    return t.sum(t.mul(y, y));
  };
  compute_gradients(loss, params);
  const auto r = finite_difference_check(
      [&] {
        Tape t;
        return t.value(loss(t))[0];
      },
      params, 1e-5);
  CHECK(r.checked == 20);
  CHECK(r.max_relative_error <= 1e-6);
}

TEST_CASE("elementwise forward values") {
  Tape tape;
  auto z = tape.constant(Tensor({1, 1}, 0.0));
  CHECK(tape.value(tape.tanh(z))[0] == 0.0);
  CHECK(tape.value(tape.sigmoid(z))[0] == 0.5);
  auto a = tape.constant(Tensor::matrix({{1, 2}}));
  auto b = tape.constant(Tensor::matrix({{3, 4}}));
  CHECK(tape.value(tape.add(a, b)) == Tensor::matrix({{4, 6}}));
  CHECK(tape.value(tape.elementwise(Elementwise::kMul, a, b)) == Tensor::matrix({{3, 8}}));
  auto r = tape.constant(Tensor::matrix({{-1.5, 0.0, 2.0}}));
  CHECK(tape.value(tape.relu(r)) == Tensor::matrix({{0, 0, 2}}));
}

TEST_CASE("elementwise shape mismatch and missing operand") {
  Tape tape;
  auto a = tape.constant(Tensor({1, 2}));
  auto b = tape.constant(Tensor({2, 1}));
  CHECK_THROWS_AS(tape.add(a, b), DimensionError);
  CHECK_THROWS_AS(tape.mul(a, b), DimensionError);
  CHECK_THROWS_AS(tape.elementwise(Elementwise::kAdd, a), DimensionError);
  CHECK_THROWS_AS(tape.add_bias(tape.constant(Tensor({3, 2})), b), DimensionError);
}

TEST_CASE("sigmoid gradient at 1 matches central difference") {
  Parameter x("x", Tensor({1, 1}, 1.0));
  Parameter* params[] = {&x};
  compute_gradients([&](Tape& t) { return t.sum(t.sigmoid(t.parameter(x))); }, params);
  const double s = 1.0 / (1.0 + std::exp(-1.0));
  CHECK(x.grad[0] == doctest::Approx(s * (1 - s)).epsilon(1e-14));
  const double eps = 1e-5;
  auto f = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  const double numeric = (f(1 + eps) - f(1 - eps)) / (2 * eps);
  CHECK(std::abs(x.grad[0] - numeric) <= 1e-8);
}

TEST_CASE("concat joins rows and splits gradients") {
  Parameter a("a", Tensor::matrix({{1, 2}}));
  Parameter b("b", Tensor::matrix({{3}}));
  Tape tape;
  auto c = tape.concat(tape.parameter(a), tape.parameter(b));
  CHECK(tape.value(c) == Tensor::matrix({{1, 2, 3}}));
  tape.backward(tape.sum(c));
  CHECK(a.grad == Tensor::matrix({{1, 1}}));
  CHECK(b.grad == Tensor::matrix({{1}}));

  Tape t2;
  CHECK_THROWS_AS(t2.concat(t2.constant(Tensor({2, 2})), t2.constant(Tensor({1, 1}))),
                  DimensionError);
  CHECK_THROWS_AS(Tensor({1, 0}), DimensionError);
}

TEST_CASE("softmax cross-entropy values") {
  Tape tape;
  for (std::size_t target = 0; target < 4; ++target) {
    auto l = tape.softmax_cross_entropy(tape.constant(Tensor({1, 4}, 0.7)), target);
    CHECK(tape.value(l)[0] == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  }
  auto sat = tape.softmax_cross_entropy(tape.constant(Tensor::matrix({{100, 0}})), 0);
  CHECK(std::isfinite(tape.value(sat)[0]));
  CHECK(tape.value(sat)[0] <= 1e-6);
  auto big = tape.softmax_cross_entropy(tape.constant(Tensor::matrix({{1000, -1000}})), 1);
  CHECK(tape.value(big)[0] == doctest::Approx(2000.0));
  CHECK_THROWS_AS(tape.softmax_cross_entropy(tape.constant(Tensor({1, 3})), 3),
                  DimensionError);
}

TEST_CASE("softmax cross-entropy matches the direct formula") {
  // -log(e^2 / (e^1 + e^2 + e^3)) evaluated in long double.
  const long double e1 = std::exp(1.0L), e2 = std::exp(2.0L), e3 = std::exp(3.0L);
  const long double z = e1 + e2 + e3;
  const double expected_loss = static_cast<double>(-std::log(e2 / z));
  const double expected_grad[] = {static_cast<double>(e1 / z),
                                  static_cast<double>(e2 / z - 1.0L),
                                  static_cast<double>(e3 / z)};

  Parameter logits("logits", Tensor::matrix({{1.0, 2.0, 3.0}}));
  Parameter* params[] = {&logits};
  Tape tape;
  auto loss = tape.softmax_cross_entropy(tape.parameter(logits), 1);
  logits.zero_grad();
  tape.backward(loss);
  CHECK(tape.value(loss)[0] == doctest::Approx(expected_loss).epsilon(1e-14));
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(logits.grad[k] == doctest::Approx(expected_grad[k]).epsilon(1e-14));
  }
  const Tensor& p = tape.softmax_of(loss);
  CHECK(std::abs(std::accumulate(p.values().begin(), p.values().end(), 0.0) - 1.0) <= 1e-9);
  (void)params;
}

TEST_CASE("softmax probabilities form a distribution") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    Tape tape;
    const std::size_t k = 2 + rng.index(7);
    auto l = tape.softmax_cross_entropy(tape.constant(random_tensor({1, k}, rng, 50.0)),
                                        rng.index(k));
    const Tensor& p = tape.softmax_of(l);
    double total = 0.0;
    for (double v : p.values()) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      total += v;
    }
    CHECK(std::abs(total - 1.0) <= 1e-9);
  }
}

TEST_CASE("grad_reverse is the identity forward and negates backward") {
  Rng rng(3);
  Parameter x("x", random_tensor({2, 3}, rng, 10.0));
  Tape tape;
  auto h = tape.parameter(x);
  auto r = tape.grad_reverse(h, 1.0);
  CHECK(tape.value(r) == x.value);
  CHECK(tape.node(r).reversal_scale == 1.0);
  CHECK_FALSE(tape.node(h).reversal_scale.has_value());
  x.zero_grad();
  tape.backward(tape.sum(r));
  CHECK(x.grad == Tensor({2, 3}, -1.0));

  Tape t2;
  CHECK_THROWS_AS(t2.grad_reverse(t2.constant(Tensor({1, 1})), -0.1), ConfigError);
  CHECK_THROWS_AS(t2.grad_reverse(t2.constant(Tensor({1, 1})), std::nan("")), ConfigError);
}

TEST_CASE("grad_reverse with lambda 1e-3 matches the signed objective") {
  Rng rng(17);
  Parameter h("h", random_tensor({1, 3}, rng));
  Parameter w_task("w_task", random_tensor({2, 3}, rng));
  Parameter w_adv("w_adv", random_tensor({2, 3}, rng));
  const double lambda = 1e-3;
  Parameter* params[] = {&h};
  compute_gradients(
      [&](Tape& t) {
        auto hv = t.parameter(h);
        auto task = t.softmax_cross_entropy(t.linear(hv, t.parameter(w_task)), 0);
        auto adv = t.softmax_cross_entropy(
            t.linear(t.grad_reverse(hv, lambda), t.parameter(w_adv)), 1);
        return t.add(task, adv);
      },
      params);
  const auto r = finite_difference_check(
      [&] {
        Tape t;
        auto hv = t.parameter(h);
        auto task = t.softmax_cross_entropy(t.linear(hv, t.parameter(w_task)), 0);
        auto adv = t.softmax_cross_entropy(t.linear(hv, t.parameter(w_adv)), 1);
        return t.value(task)[0] - lambda * t.value(adv)[0];
      },
      params);
  CHECK(r.max_relative_error <= 1e-6);
}

TEST_CASE("lambda 0 reversal equals a detached branch bit for bit") {
  Rng rng(23);
  Parameter h("h", random_tensor({1, 4}, rng));
  Parameter w_task("w_task", random_tensor({3, 4}, rng));
  Parameter w_adv("w_adv", random_tensor({2, 4}, rng));

  Tape with;
  auto hv = with.parameter(h);
  auto task = with.softmax_cross_entropy(with.linear(hv, with.parameter(w_task)), 2);
  auto adv = with.softmax_cross_entropy(
      with.linear(with.grad_reverse(hv, 0.0), with.parameter(w_adv)), 0);
  h.zero_grad();
  with.backward(with.add(task, adv));
  const Tensor adversarial = h.grad;

  Tape without;
  auto hv2 = without.parameter(h);
  auto task2 = without.softmax_cross_entropy(without.linear(hv2, without.parameter(w_task)), 2);
  h.zero_grad();
  without.backward(task2);
  CHECK(adversarial == h.grad);
}

TEST_CASE("dropout modes and errors") {
  Rng rng(1);
  const Tensor x = random_tensor({3, 5}, rng);
  Tape tape(9);
  auto v = tape.constant(x);
  CHECK(tape.value(tape.dropout(v, 0.0, Mode::kTrain)) == x);
  CHECK(tape.value(tape.dropout(v, 0.0, Mode::kEval)) == x);
  CHECK(tape.value(tape.dropout(v, 0.5, Mode::kEval)) == x);
  CHECK_THROWS_AS(tape.dropout(v, 1.0, Mode::kTrain), ConfigError);
  CHECK_THROWS_AS(tape.dropout(v, -0.1, Mode::kTrain), ConfigError);
}

TEST_CASE("inverted dropout preserves the mean") {
  Tape tape(2024);
  const std::size_t n = 100000;
  auto y = tape.dropout(tape.constant(Tensor({1, n}, 3.0)), 0.5, Mode::kTrain);
  double total = 0.0;
  std::size_t zeros = 0;
  for (double v : tape.value(y).values()) {
    total += v;
    zeros += v == 0.0;
    CHECK((v == 0.0 || v == 6.0));
  }
  CHECK(std::abs(total / n - 3.0) <= 0.02 * 3.0);
  CHECK(zeros > 0);
}

TEST_CASE("dropout backward uses the stored mask") {
  Parameter x("x", Tensor({1, 50}, 1.0));
  Tape tape(4);
  auto y = tape.dropout(tape.parameter(x), 0.3, Mode::kTrain);
  x.zero_grad();
  tape.backward(tape.sum(y));
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(x.grad[i] == tape.value(y)[i]);
  }
}

TEST_CASE("tape replay with the same seed is bit-identical") {
  auto run = [](std::uint64_t seed) {
    Tape tape(seed);
    auto y = tape.dropout(tape.constant(Tensor({4, 8}, 1.5)), 0.5, Mode::kTrain);
    return Tensor(tape.value(tape.tanh(y)));
  };
  CHECK(run(77) == run(77));
  CHECK_FALSE(run(77) == run(78));
}

TEST_CASE("backward basics") {
  Parameter x("x", Tensor({1, 1}, 3.0));
  Tape tape;
  auto xv = tape.parameter(x);
  x.zero_grad();
  tape.backward(tape.sum(tape.mul(xv, xv)));
  CHECK(x.grad[0] == 6.0);

  Tape t2;
  Parameter wide("wide", Tensor({1, 3}, 1.0));
  CHECK_THROWS_AS(t2.backward(t2.parameter(wide)), DimensionError);
}

TEST_CASE("gradients accumulate across backward calls") {
  Parameter x("x", Tensor({1, 1}, 2.0));
  x.zero_grad();
  for (int i = 0; i < 3; ++i) {
    Tape tape;
    auto xv = tape.parameter(x);
    tape.backward(tape.sum(tape.scale(xv, 5.0)));
  }
  CHECK(x.grad[0] == 15.0);
}

TEST_CASE("embed skips the PAD row in backward") {
  Parameter table("embedding", Tensor::matrix({{0, 0}, {1, 2}, {3, 4}}));
  const std::size_t ids[] = {0, 2, 2, 1};
  Tape tape;
  auto e = tape.embed(tape.parameter(table), ids);
  CHECK(tape.value(e) == Tensor::matrix({{0, 0}, {3, 4}, {3, 4}, {1, 2}}));
  table.zero_grad();
  tape.backward(tape.sum(e));
  CHECK(table.grad == Tensor::matrix({{0, 0}, {1, 1}, {2, 2}}));
  const std::size_t bad[] = {3};
  CHECK_THROWS_AS(tape.embed(tape.parameter(table), bad), DimensionError);
}

TEST_CASE("finite_difference_check on x squared") {
  Parameter x("x", Tensor({1, 1}, 2.0));
  Parameter* params[] = {&x};
  compute_gradients([&](Tape& t) {
    auto v = t.parameter(x);
    return t.sum(t.mul(v, v));
  }, params);
  const auto r = finite_difference_check(
      [&] { return x.value[0] * x.value[0]; }, params, 1e-5);
  CHECK(r.max_relative_error <= 1e-9);
  CHECK_THROWS_AS(finite_difference_check([] { return std::nan(""); }, params), NumericError);
}

TEST_CASE("finite_difference_check on a one-layer softmax net") {
  Rng rng(8);
  Parameter w("W", random_tensor({3, 4}, rng));
  Parameter b("b", random_tensor({1, 3}, rng));
  const Tensor x = random_tensor({1, 4}, rng);
  Parameter* params[] = {&w, &b};
  auto loss = [&](Tape& t) {
    auto z = t.add_bias(t.linear(t.constant(x), t.parameter(w)), t.parameter(b));
    return t.softmax_cross_entropy(z, 2);
  };
  compute_gradients(loss, params);
  const auto r = finite_difference_check([&] {
    Tape t;
    return t.value(loss(t))[0];
  }, params);
  CHECK(r.max_relative_error <= 1e-6);
}

TEST_CASE("signed objective with lambda 0.5") {
  Rng rng(12);
  Parameter w("W", random_tensor({4, 3}, rng));
  Parameter task_head("task", random_tensor({2, 4}, rng));
  Parameter adv_head("adv", random_tensor({3, 4}, rng));
  const Tensor x = random_tensor({1, 3}, rng);
  const double lambda = 0.5;
  Parameter* encoder[] = {&w};
  Parameter* all[] = {&w, &task_head, &adv_head};
  compute_gradients([&](Tape& t) {
    auto h = t.tanh(t.linear(t.constant(x), t.parameter(w)));
    auto task = t.softmax_cross_entropy(t.linear(h, t.parameter(task_head)), 1);
    auto adv = t.softmax_cross_entropy(
        t.linear(t.grad_reverse(h, lambda), t.parameter(adv_head)), 2);
    return t.add(task, adv);
  }, all);
  auto losses = [&] {
    Tape t;
    auto h = t.tanh(t.linear(t.constant(x), t.parameter(w)));
    auto task = t.softmax_cross_entropy(t.linear(h, t.parameter(task_head)), 1);
    auto adv = t.softmax_cross_entropy(t.linear(h, t.parameter(adv_head)), 2);
    return std::pair{t.value(task)[0], t.value(adv)[0]};
  };
  const auto enc = finite_difference_check([&] {
    auto [task, adv] = losses();
    return task - lambda * adv;
  }, encoder);
  CHECK(enc.max_relative_error <= 1e-5);
  Parameter* disc[] = {&adv_head};
  const auto d = finite_difference_check([&] { return losses().second; }, disc);
  CHECK(d.max_relative_error <= 1e-5);
}

TEST_CASE("random graphs agree with finite differences") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.index(4), d = 1 + rng.index(6), k = 2 + rng.index(5);
    Parameter w1("W1", random_tensor({d, d}, rng));
    Parameter b1("b1", random_tensor({1, d}, rng));
    Parameter w2("W2", random_tensor({k, 2 * d}, rng));
    Parameter x("x", random_tensor({n, d}, rng));
    const std::size_t target = rng.index(k);
    Parameter* params[] = {&w1, &b1, &w2, &x};
    auto loss = [&](Tape& t) {
      auto xv = t.parameter(x);
      auto hidden = t.add_bias(t.linear(xv, t.parameter(w1)), t.parameter(b1));
      auto a = t.sigmoid(t.row(hidden, n - 1));
      auto b = t.tanh(t.row(t.mul(hidden, xv), 0));
      auto joined = t.concat(a, b);
      auto z = t.linear(joined, t.parameter(w2));
      return t.add(t.softmax_cross_entropy(z, target), t.scale(t.sum(t.relu(hidden)), 0.1));
    };
    compute_gradients(loss, params);
    const auto r = finite_difference_check([&] {
      Tape t;
      return t.value(loss(t))[0];
    }, params);
    CHECK(r.max_relative_error <= 1e-4);
  }
}

TEST_CASE("slice, stack and add_n") {
  Parameter a("a", Tensor::matrix({{1, 2, 3}, {4, 5, 6}}));
  Tape tape;
  auto av = tape.parameter(a);
  auto s = tape.slice_cols(av, 1, 2);
  CHECK(tape.value(s) == Tensor::matrix({{2, 3}, {5, 6}}));
  const Var rows[] = {tape.row(av, 1), tape.row(av, 0)};
  auto st = tape.stack_rows(rows);
  CHECK(tape.value(st) == Tensor::matrix({{4, 5, 6}, {1, 2, 3}}));
  const Var terms[] = {s, s, s};
  auto total = tape.add_n(terms);
  CHECK(tape.value(total) == Tensor::matrix({{6, 9}, {15, 18}}));
  a.zero_grad();
  tape.backward(tape.add(tape.sum(total), tape.sum(st)));
  CHECK(a.grad == Tensor::matrix({{1, 4, 4}, {1, 4, 4}}));
  CHECK_THROWS_AS(tape.slice_cols(av, 2, 2), DimensionError);
  CHECK_THROWS_AS(tape.row(av, 2), DimensionError);
}
