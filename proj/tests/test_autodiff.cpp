#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_util.hpp"

#include <cstring>

using namespace fsce;
using fsce::test::check_op_gradient;
using fsce::test::random_tensor;
using fsce::test::random_tensor_no_kink;

TEST_CASE("elementwise add/sub/mul basics") {
  Tensor a({2}, {1, 2});
  Tensor b({2}, {3, 4});
  CHECK(mul_elementwise(a, b).at({0}) == 3);
  CHECK(mul_elementwise(a, b).at({1}) == 8);
  CHECK(add(a, b).at({1}) == 6);
  CHECK(sub(b, a).at({0}) == 2);
  CHECK_THROWS_AS(add(a, Tensor({3})), std::invalid_argument);
}

TEST_CASE("broadcast multiply over unit axis matches explicit tiling and sums grads") {
  Rng rng(11);
  const int w = 5, c = 3;
  Tensor f = random_tensor({w, c}, rng);
  Tensor a = random_tensor({1, c}, rng);

  Tensor tiled({w, c});
  for (int i = 0; i < w; ++i)
    for (int j = 0; j < c; ++j) tiled.data()[i * c + j] = a.at({0, j});

  Tensor direct = mul_elementwise(f, a);
  Tensor viaTile = mul_elementwise(f, tiled);
  for (std::int64_t i = 0; i < direct.size(); ++i)
    CHECK(direct.data()[i] == doctest::Approx(viaTile.data()[i]).epsilon(1e-15));

  // backward: broadcast-axis gradients accumulate over the w positions
  Tape t1;
  Tensor a1 = t1.watch(a);
  t1.backward(sum(mul_elementwise(f, a1)));
  Eigen::ArrayXd g_bcast = t1.grad(a1);

  Tape t2;
  Tensor a2 = t2.watch(tiled);
  t2.backward(sum(mul_elementwise(f, a2)));
  Eigen::ArrayXd g_tiled = t2.grad(a2);
  for (int j = 0; j < c; ++j) {
    double manual = 0;
    for (int i = 0; i < w; ++i) manual += g_tiled[i * c + j];
    CHECK(g_bcast[j] == doctest::Approx(manual).epsilon(1e-12));
  }
}

TEST_CASE("grad of sum(a*b) wrt a equals b") {
  Rng rng(3);
  Tensor a = random_tensor({4, 3}, rng);
  Tensor b = random_tensor({4, 3}, rng);
  Tape tape;
  Tensor at = tape.watch(a);
  tape.backward(sum(mul_elementwise(at, b)));
  auto g = tape.grad(at);
  for (std::int64_t i = 0; i < b.size(); ++i)
    CHECK(std::abs(g[i] - b.data()[i]) < 1e-10);
}

TEST_CASE("matmul identity and correlation-map shape") {
  Tensor eye({3, 3});
  for (int i = 0; i < 3; ++i) eye.data()[i * 3 + i] = 1.0;
  Rng rng(5);
  Tensor m = random_tensor({3, 4}, rng);
  Tensor out = matmul(eye, m);
  for (std::int64_t i = 0; i < m.size(); ++i) CHECK(out.data()[i] == doctest::Approx(m.data()[i]));

  const int n = 2, w = 4, c = 3;
  Tensor p = random_tensor({n * w, c}, rng);
  Tensor q = random_tensor({c, w}, rng);
  CHECK(matmul(p, q).shape() == Shape{n * w, w});
  CHECK_THROWS_AS(matmul(p, p), std::invalid_argument);
}

TEST_CASE("gradient checks: every differentiable op on random inputs") {
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    Rng lr = rng.split(trial);
    const std::uint64_t wseed = lr.next_u64();

    {
      Tensor x = random_tensor({3, 4}, lr);
      Tensor other = random_tensor({3, 4}, lr);
      auto gc = check_op_gradient(x, [&](const Tensor& t) { return mul_elementwise(t, other); }, wseed);
      CHECK(gc.max_rel_err < 1e-4);
      gc = check_op_gradient(x, [&](const Tensor& t) { return add(t, other); }, wseed);
      CHECK(gc.max_rel_err < 1e-4);
      gc = check_op_gradient(x, [&](const Tensor& t) { return sub(other, t); }, wseed);
      CHECK(gc.max_rel_err < 1e-4);
    }
    {
      Tensor x = random_tensor({3, 5}, lr);
      Tensor other = random_tensor({5, 2}, lr);
      auto gc = check_op_gradient(x, [&](const Tensor& t) { return matmul(t, other); }, wseed);
      CHECK(gc.max_rel_err < 1e-4);
      auto gc2 = check_op_gradient(other, [&](const Tensor& t) { return matmul(x, t); }, wseed);
      CHECK(gc2.max_rel_err < 1e-4);
    }
    {
      Tensor x = random_tensor({2, 8}, lr);
      Tensor k = random_tensor({3, 2, 3}, lr);
      Tensor b = random_tensor({3}, lr);
      auto gc = check_op_gradient(x, [&](const Tensor& t) { return conv1d(t, k, b); }, wseed);
      CHECK(gc.max_rel_err < 1e-4);
      gc = check_op_gradient(k, [&](const Tensor& t) { return conv1d(x, t, b); }, wseed);
      CHECK(gc.max_rel_err < 1e-4);
      gc = check_op_gradient(b, [&](const Tensor& t) { return conv1d(x, k, t); }, wseed);
      CHECK(gc.max_rel_err < 1e-4);
    }
    {
      Tensor x = random_tensor({2, 4, 5}, lr);
      Tensor k = random_tensor({3, 2, 3, 3}, lr);
      Tensor b = random_tensor({3}, lr);
      auto gc = check_op_gradient(x, [&](const Tensor& t) { return conv2d(t, k, b); }, wseed);
      CHECK(gc.max_rel_err < 1e-4);
      gc = check_op_gradient(k, [&](const Tensor& t) { return conv2d(x, t, b); }, wseed);
      CHECK(gc.max_rel_err < 1e-4);
    }
    {
      Tensor x = random_tensor({4}, lr);
      Tensor w = random_tensor({3, 4}, lr);
      Tensor b = random_tensor({3}, lr);
      auto gc = check_op_gradient(x, [&](const Tensor& t) { return dense(t, w, b); }, wseed);
      CHECK(gc.max_rel_err < 1e-4);
      gc = check_op_gradient(w, [&](const Tensor& t) { return dense(x, t, b); }, wseed);
      CHECK(gc.max_rel_err < 1e-4);
    }
    {
      Tensor x = random_tensor_no_kink({3, 4}, lr);
      auto gc = check_op_gradient(x, [](const Tensor& t) { return relu(t); }, wseed);
      CHECK(gc.max_rel_err < 1e-4);
      gc = check_op_gradient(x, [](const Tensor& t) { return sigmoid(t); }, wseed);
      CHECK(gc.max_rel_err < 1e-4);
    }
    {
      Tensor x = random_tensor({6}, lr);
      auto gc = check_op_gradient(x, [](const Tensor& t) { return softmax_temp(t, 0.7); }, wseed);
      CHECK(gc.max_rel_err < 1e-4);
    }
    {
      Tensor x = random_tensor({5, 3}, lr);
      auto gc = check_op_gradient(x, [](const Tensor& t) { return global_average_pool(t); }, wseed);
      CHECK(gc.max_rel_err < 1e-4);
      // rows bounded away from zero norm
      Tensor y = random_tensor({4, 3}, lr, 0.2, 1.0);
      gc = check_op_gradient(y, [](const Tensor& t) { return l2_normalize_rows(t); }, wseed);
      CHECK(gc.max_rel_err < 1e-4);
    }
    {
      Tensor x = random_tensor({2, 3}, lr);
      Tensor other = random_tensor({2, 3}, lr);
      auto gc = check_op_gradient(
          x, [&](const Tensor& t) { return concat({t, other}, 0); }, wseed);
      CHECK(gc.max_rel_err < 1e-4);
      gc = check_op_gradient(x, [](const Tensor& t) { return reshape(t, {6}); }, wseed);
      CHECK(gc.max_rel_err < 1e-4);
      gc = check_op_gradient(x, [](const Tensor& t) { return transpose2d(t); }, wseed);
      CHECK(gc.max_rel_err < 1e-4);
    }
    {
      Tensor p = random_tensor({4}, lr, 0.05, 0.95);
      Tensor t = random_tensor({4}, lr, 0.0, 1.0);
      auto gc = check_op_gradient(p, [&](const Tensor& x) { return mse_loss(x, t); }, wseed);
      CHECK(gc.max_rel_err < 1e-4);
      gc = check_op_gradient(p, [&](const Tensor& x) { return bce_loss(x, t); }, wseed);
      CHECK(gc.max_rel_err < 1e-4);
    }
  }
}

TEST_CASE("conv1d delta kernel is the identity; channel-sum kernel") {
  Rng rng(7);
  Tensor x = random_tensor({1, 9}, rng);
  Tensor k({1, 1, 3}, {0, 1, 0});
  Tensor b({1});
  Tensor y = conv1d(x, k, b);
  for (int i = 0; i < 9; ++i) CHECK(y.at({0, i}) == x.at({0, i}));

  Tensor x2 = random_tensor({3, 6}, rng);
  Tensor ones({2, 3, 1});
  ones.flat().setConstant(1.0);
  Tensor y2 = conv1d(x2, ones, Tensor({2}));
  for (int p = 0; p < 6; ++p) {
    const double s = x2.at({0, p}) + x2.at({1, p}) + x2.at({2, p});
    CHECK(y2.at({0, p}) == doctest::Approx(s).epsilon(1e-14));
    CHECK(y2.at({1, p}) == doctest::Approx(s).epsilon(1e-14));
  }
  CHECK_THROWS_AS(conv1d(x2, Tensor({2, 3, 2}), Tensor({2})), std::invalid_argument);
}

TEST_CASE("conv2d delta kernel identity and constant preservation") {
  Rng rng(9);
  Tensor x = random_tensor({1, 5, 6}, rng);
  Tensor k({1, 1, 3, 3});
  k.data()[4] = 1.0;  // center
  Tensor y = conv2d(x, k, Tensor({1}));
  for (std::int64_t i = 0; i < x.size(); ++i)
    CHECK(y.data()[i] == doctest::Approx(x.data()[i]));

  // interior positions of an averaging kernel on constant input keep the constant
  Tensor c = Tensor::full({1, 5, 6}, 2.5);
  Tensor avg({1, 1, 3, 3});
  avg.flat().setConstant(1.0 / 9.0);
  Tensor yc = conv2d(c, avg, Tensor({1}));
  for (int r = 1; r < 4; ++r)
    for (int col = 1; col < 5; ++col) CHECK(yc.at({0, r, col}) == doctest::Approx(2.5));
}

TEST_CASE("dense examples") {
  Tensor w({2, 2}, {1, 0, 0, 1});
  Tensor b({2});
  Tensor x({2}, {5, -3});
  Tensor y = dense(x, w, b);
  CHECK(y.at({0}) == 5);
  CHECK(y.at({1}) == -3);

  Tensor w2({1, 2}, {1, 1});
  Tensor b2({1}, {1});
  Tensor x2({2}, {2, 3});
  CHECK(dense(x2, w2, b2).at({0}) == 6);
}

TEST_CASE("relu and sigmoid examples") {
  Tensor x({3}, {-1, 0, 2});
  Tensor y = relu(x);
  CHECK(y.at({0}) == 0);
  CHECK(y.at({1}) == 0);
  CHECK(y.at({2}) == 2);

  CHECK(sigmoid(Tensor::scalar(0)).item() == doctest::Approx(0.5));

  // relu backward passes zero at exactly 0
  Tape tape;
  Tensor xt = tape.watch(x);
  tape.backward(sum(relu(xt)));
  auto g = tape.grad(xt);
  CHECK(g[0] == 0);
  CHECK(g[1] == 0);
  CHECK(g[2] == 1);

  // sigmoid gradient at 0 is 1/4
  Tape t2;
  Tensor z = t2.watch(Tensor::scalar(0));
  t2.backward(sigmoid(z));
  CHECK(t2.grad(z)[0] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("softmax_temp: normalization, uniformity, shift invariance, large tau") {
  Tensor u = Tensor::full({5}, 3.7);
  Tensor y = softmax_temp(u, 0.05);
  for (int i = 0; i < 5; ++i) CHECK(y.at({i}) == doctest::Approx(0.2).epsilon(1e-12));

  Rng rng(13);
  for (int t = 0; t < 50; ++t) {
    Tensor x = random_tensor({7}, rng, -3, 3);
    Tensor s = softmax_temp(x, 0.3);
    double total = 0;
    for (int i = 0; i < 7; ++i) {
      CHECK(s.at({i}) > 0);
      total += s.at({i});
    }
    CHECK(std::abs(total - 1.0) < 1e-9);

    Tensor shifted = add_scalar(x, 11.25);
    Tensor s2 = softmax_temp(shifted, 0.3);
    for (int i = 0; i < 7; ++i) CHECK(std::abs(s.at({i}) - s2.at({i})) < 1e-12);
  }

  Tensor two({2}, {1, 0});
  Tensor nearly_uniform = softmax_temp(two, 1e6);
  CHECK(nearly_uniform.at({0}) == doctest::Approx(0.5).epsilon(1e-4));
  CHECK_THROWS_AS(softmax_temp(two, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(softmax_temp(two, -1.0), std::invalid_argument);
}

TEST_CASE("global_average_pool examples") {
  Tensor x({2, 2}, {1, 3, 3, 5});
  Tensor y = global_average_pool(x);
  CHECK(y.at({0}) == 2);
  CHECK(y.at({1}) == 4);

  Tensor row({1, 3}, {7, 8, 9});
  Tensor yr = global_average_pool(row);
  for (int i = 0; i < 3; ++i) CHECK(yr.at({i}) == row.at({0, i}));

  Tape tape;
  Tensor xt = tape.watch(x);
  tape.backward(sum(global_average_pool(xt)));
  auto g = tape.grad(xt);
  for (int i = 0; i < 4; ++i) CHECK(g[i] == doctest::Approx(0.5));
}

TEST_CASE("l2_normalize_rows: 3-4-5 row and guarded zero row") {
  Tensor x({2, 2}, {3, 4, 0, 0});
  Tensor y = l2_normalize_rows(x, 1e-12);
  CHECK(y.at({0, 0}) == doctest::Approx(0.6));
  CHECK(y.at({0, 1}) == doctest::Approx(0.8));
  CHECK(y.at({1, 0}) == 0);
  CHECK(y.at({1, 1}) == 0);
}

TEST_CASE("concat and reshape round trip") {
  Rng rng(17);
  Tensor a = random_tensor({2, 3}, rng);
  Tensor b = random_tensor({2, 3}, rng);
  Tensor c = concat({a, b}, 0);
  CHECK(c.shape() == Shape{4, 3});
  CHECK(c.at({0, 0}) == a.at({0, 0}));
  CHECK(c.at({2, 1}) == b.at({0, 1}));

  // n pairs of (P_i, Q_i), each (w, c), stacked to (2n, w, c)
  const int n = 3, w = 4, ch = 2;
  std::vector<Tensor> pairs;
  for (int i = 0; i < 2 * n; ++i) pairs.push_back(random_tensor({1, w, ch}, rng));
  Tensor stacked = concat(pairs, 0);
  CHECK(stacked.shape() == Shape{2 * n, w, ch});

  Tensor r = reshape(a, {3, 2});
  Tensor back = reshape(r, {2, 3});
  for (std::int64_t i = 0; i < a.size(); ++i) CHECK(back.data()[i] == a.data()[i]);
  CHECK_THROWS_AS(reshape(a, {5}), std::invalid_argument);
  CHECK_THROWS_AS(concat({a, Tensor({2, 4})}, 0), std::invalid_argument);
}

TEST_CASE("losses: values and validation") {
  Rng rng(19);
  Tensor x = random_tensor({6}, rng);
  CHECK(mse_loss(x, x).item() == 0);
  CHECK(mse_loss(Tensor({2}, {0, 2}), Tensor({2})).item() == doctest::Approx(2.0));

  const double ln2 = std::log(2.0);
  for (double tv : {0.0, 0.3, 1.0}) {
    Tensor p = Tensor::full({3}, 0.5);
    Tensor t = Tensor::full({3}, tv);
    CHECK(bce_loss(p, t).item() == doctest::Approx(ln2).epsilon(1e-12));
  }
  CHECK_THROWS_AS(bce_loss(Tensor({1}, {1.5}), Tensor({1}, {0.5})), std::invalid_argument);
  CHECK_THROWS_AS(bce_loss(Tensor({1}, {0.5}), Tensor({1}, {-0.1})), std::invalid_argument);
}

TEST_CASE("backward: scalar-only, ones for sum, additive accumulation across losses") {
  Rng rng(23);
  Tensor x = random_tensor({4}, rng);
  Tape tape;
  Tensor xt = tape.watch(x);
  Tensor y = mul_elementwise(xt, xt);
  CHECK_THROWS_AS(tape.backward(y), std::invalid_argument);

  tape.backward(sum(xt));
  auto g1 = tape.grad(xt);
  for (int i = 0; i < 4; ++i) CHECK(g1[i] == 1.0);

  // second loss from the same tape accumulates additively
  tape.backward(mse_loss(xt, Tensor({4})));
  auto g2 = tape.grad(xt);
  for (int i = 0; i < 4; ++i)
    CHECK(g2[i] == doctest::Approx(1.0 + 2.0 * x.data()[i] / 4.0).epsilon(1e-12));
}

TEST_CASE("forward passes are bit-deterministic") {
  Rng rng(29);
  Tensor x = random_tensor({3, 8}, rng);
  Tensor k = random_tensor({4, 3, 3}, rng);
  Tensor b = random_tensor({4}, rng);
  auto run = [&] {
    Tensor h = relu(conv1d(x, k, b));
    Tensor pooled = global_average_pool(transpose2d(h));
    return softmax_temp(pooled, 0.2);
  };
  Tensor y1 = run();
  Tensor y2 = run();
  CHECK(std::memcmp(y1.data(), y2.data(), static_cast<std::size_t>(y1.size()) * 8) == 0);
}

TEST_CASE("rank and extent validation") {
  CHECK_THROWS_AS(Tensor({0}), std::invalid_argument);
  CHECK_THROWS_AS(Tensor({2, -1}), std::invalid_argument);
  CHECK_THROWS_AS(Tensor({1, 1, 1, 1, 1}), std::invalid_argument);
}
