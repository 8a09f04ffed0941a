#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sketchgen/gradcheck.hpp>
#include <sketchgen/rng.hpp>
#include <sketchgen/tensor.hpp>

using namespace sketchgen;

using Td = Tensor<double>;
using Tf = Tensor<float>;

static Td random_tensor(Shape shape, Rng& rng, double lo = -1, double hi = 1) {
  Td t(shape);
  for (long i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(lo, hi);
  return t;
}

TEST_CASE("shape bookkeeping and invariants") {
  Td t = Td::from({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.size() == 6);
  CHECK_THROWS_AS(Td::from({2, 2}, {1, 2, 3}), ShapeError);
  CHECK_THROWS_AS(t.item(), ShapeError);
}

TEST_CASE("relu and sigmoid forward values") {
  Td x = Td::from({3}, {-1, 0, 2});
  Td y = relu(x);
  CHECK(y.data()[0] == 0);
  CHECK(y.data()[1] == 0);
  CHECK(y.data()[2] == 2);

  CHECK(sigmoid(Td::scalar(0)).item() == doctest::Approx(0.5));
}

TEST_CASE("mean over all axes") {
  Td x = Td::from({2, 2}, {1, 3, 5, 7});
  CHECK(mean_all(x).item() == doctest::Approx(4.0));
}

TEST_CASE("reduce_mean over a single axis") {
  Td x = Td::from({2, 3}, {1, 2, 3, 4, 5, 6});
  Td m0 = reduce_mean(x, {0});
  REQUIRE(m0.shape() == Shape{3});
  CHECK(m0.data()[0] == doctest::Approx(2.5));
  CHECK(m0.data()[2] == doctest::Approx(4.5));
  Td m1 = reduce_mean(x, {1});
  REQUIRE(m1.shape() == Shape{2});
  CHECK(m1.data()[0] == doctest::Approx(2.0));
  CHECK(m1.data()[1] == doctest::Approx(5.0));
}

TEST_CASE("variance matches direct formula") {
  Rng rng(7);
  Td x = random_tensor({2, 4}, rng);
  Td v = reduce_variance(x, {1});
  for (int i = 0; i < 2; ++i) {
    double m = 0, vv = 0;
    for (int j = 0; j < 4; ++j) m += x.data()[i * 4 + j] / 4.0;
    for (int j = 0; j < 4; ++j) {
      double d = x.data()[i * 4 + j] - m;
      vv += d * d / 4.0;
    }
    CHECK(v.data()[i] == doctest::Approx(vv));
  }
}

TEST_CASE("backward of sum(x^2)") {
  Td x = Td::from({1}, {3}, true);
  Td loss = sum_all(mul(x, x));
  backward(loss);
  CHECK(x.grad()[0] == doctest::Approx(6.0));
}

TEST_CASE("gradient accumulates across uses") {
  Td x = Td::from({3}, {1, 2, 3}, true);
  Td loss = sum_all(add(x, x));
  backward(loss);
  for (int i = 0; i < 3; ++i) CHECK(x.grad()[i] == doctest::Approx(2.0));
}

TEST_CASE("sigmoid gradient at zero is 1/4") {
  Td x = Td::scalar(0, true);
  Td loss = sum_all(sigmoid(x));
  backward(loss);
  CHECK(x.grad()[0] == doctest::Approx(0.25));
}

TEST_CASE("backward errors") {
  Td x = Td::from({2}, {1, 2}, true);
  Td y = mul(x, x);
  CHECK_THROWS_AS(backward(y), TapeError);  // non-scalar
  Td loss = sum_all(y);
  backward(loss);
  CHECK_THROWS_AS(backward(loss), TapeError);  // tape consumed
}

TEST_CASE("adjoint linearity: backward(a+b) equals separate passes") {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> vals(4);
    for (auto& v : vals) v = rng.uniform(-1, 1);

    Td x1 = Td::from({4}, vals, true);
    Td a1 = mean_all(mul(x1, x1));
    Td b1 = sum_all(sigmoid(x1));
    backward(add(a1, b1));

    Td x2 = Td::from({4}, vals, true);
    backward(mean_all(mul(x2, x2)));
    Td x3 = Td::from({4}, vals, true);
    backward(sum_all(sigmoid(x3)));

    for (int i = 0; i < 4; ++i)
      CHECK(x1.grad()[i] ==
            doctest::Approx(x2.grad()[i] + x3.grad()[i]).epsilon(1e-12));
  }
}

TEST_CASE("matmul forward and gradcheck") {
  Td a = Td::from({2, 3}, {1, 2, 3, 4, 5, 6});
  Td b = Td::from({3, 2}, {7, 8, 9, 10, 11, 12});
  Td c = matmul(a, b);
  CHECK(c.data()[0] == doctest::Approx(58));
  CHECK(c.data()[3] == doctest::Approx(154));
  CHECK_THROWS_AS(matmul(a, a), ShapeError);

  Rng rng(3);
  Td pt = random_tensor({2, 3}, rng);
  Td other = random_tensor({3, 4}, rng);
  double err = finite_diff_check(
      [&](Td& x) { return mean_all(mul(matmul(x, other), matmul(x, other))); },
      pt);
  CHECK(err < 1e-7);

  // rectangular check w.r.t. the right operand: the contraction dimensions
  // of the two backward products differ, so square shapes would hide a swap
  Td left = random_tensor({5, 3}, rng);
  Td ptb = random_tensor({3, 2}, rng);
  double errb = finite_diff_check(
      [&](Td& x) { return mean_all(mul(matmul(left, x), matmul(left, x))); },
      ptb);
  CHECK(errb < 1e-7);
}

TEST_CASE("structural ops gradcheck") {
  Rng rng(5);
  Td pt = random_tensor({2, 4, 3, 3}, rng);
  double err = finite_diff_check(
      [](Td& x) {
        Td c = concat_channels(x, x);
        Td s = slice_channels(c, 2, 6);
        Td r = reshape(s, {2, 36});
        return mean_all(mul(r, r));
      },
      pt);
  CHECK(err < 1e-7);
}

TEST_CASE("pow_scalar gradcheck away from zero") {
  Rng rng(9);
  Td pt = random_tensor({6}, rng, 0.5, 2.0);
  double err = finite_diff_check(
      [](Td& x) { return mean_all(pow_scalar(x, 3.0)); }, pt);
  CHECK(err < 1e-7);
}

TEST_CASE("reduction gradcheck over mixed axes") {
  Rng rng(13);
  Td pt = random_tensor({2, 3, 4}, rng);
  double err = finite_diff_check(
      [](Td& x) {
        Td m = reduce_mean(x, {0, 2});
        Td v = reduce_variance(x, {2});
        return add(sum_all(mul(m, m)), sum_all(v));
      },
      pt);
  CHECK(err < 1e-6);
}

TEST_CASE("softmax cross entropy value and gradcheck") {
  Td logits = Td::from({1, 3}, {0, 0, 0});
  CHECK(softmax_cross_entropy(logits, {1}).item() ==
        doctest::Approx(std::log(3.0)));

  Rng rng(17);
  Td pt = random_tensor({3, 5}, rng);
  std::vector<int> labels = {0, 3, 4};
  double err = finite_diff_check(
      [&](Td& x) { return softmax_cross_entropy(x, labels); }, pt);
  CHECK(err < 1e-6);
}

TEST_CASE("finite_diff_check on a quadratic is near exact") {
  Td pt = Td::from({1}, {3});
  double err =
      finite_diff_check([](Td& x) { return sum_all(mul(x, x)); }, pt, 1e-5);
  CHECK(err < 1e-6);
}

TEST_CASE("forward determinism for fixed seed") {
  auto run = [] {
    Rng rng(42);
    Td x = random_tensor({3, 7}, rng);
    Td y = mean_all(mul(sigmoid(x), x));
    return y.item();
  };
  CHECK(run() == run());
}

TEST_CASE("debug mode rejects non-finite results") {
  debug_checks() = true;
  Td x = Td::from({1}, {1e308});
  CHECK_THROWS_AS(mul(x, x), NumericError);
  debug_checks() = false;
}

TEST_CASE("elementwise shape mismatch names both shapes") {
  Td a = Td::from({2}, {1, 2});
  Td b = Td::from({3}, {1, 2, 3});
  try {
    add(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    std::string msg = e.what();
    CHECK(msg.find("[2]") != std::string::npos);
    CHECK(msg.find("[3]") != std::string::npos);
  }
}
