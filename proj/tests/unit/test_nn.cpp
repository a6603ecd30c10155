#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "tempdir.hpp"
#include "voin/core/error.hpp"
#include "voin/core/rng.hpp"
#include "voin/nn/adam.hpp"
#include "voin/nn/checkpoint.hpp"
#include "voin/nn/layers.hpp"
#include "voin/nn/ops.hpp"

using namespace voin;
using namespace voin::nn;
using voin::testing::check_gradient;

namespace {

Var random_var(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0, bool grad = true) {
    Rng rng(seed);
    Tensor t(shape);
    for (auto& v : t.values()) v = rng.uniform(lo, hi);
    return Var(t, grad);
}

// Weighted sum with fixed pseudo-random weights so every output entry
// contributes a distinct amount to the scalar.
Var probe(const Var& y, std::uint64_t seed = 99) {
    Var w = random_var(y.shape(), seed, 0.5, 1.5, false);
    return sum(y * w);
}

void expect_grad(const Var& x, const std::function<Var()>& f, double tol = 1e-5) {
    const auto r = check_gradient(x, f);
    INFO("max_rel=" << r.max_rel << " analytic=" << r.worst_analytic << " numeric=" << r.worst_numeric);
    CHECK(r.max_rel < tol);
    CHECK(r.any_nonzero);
}

}  // namespace

TEST_CASE("broadcast arithmetic gradients") {
    Var a = random_var({2, 3, 4}, 1);
    Var b = random_var({3, 1}, 2, 0.5, 1.5);
    expect_grad(a, [&] { return probe(a + b); });
    expect_grad(b, [&] { return probe(a + b); });
    expect_grad(a, [&] { return probe(a - b); });
    expect_grad(b, [&] { return probe(a - b); });
    expect_grad(a, [&] { return probe(a * b); });
    expect_grad(b, [&] { return probe(a * b); });
    expect_grad(a, [&] { return probe(a / b); });
    expect_grad(b, [&] { return probe(a / b); });
    expect_grad(a, [&] { return probe(-a * 2.0 + 1.0); });
}

TEST_CASE("broadcast values") {
    Var a(Tensor({2, 1}, {1, 2}));
    Var b(Tensor({1, 3}, {10, 20, 30}));
    const Var c = a + b;
    CHECK(c.shape() == Shape{2, 3});
    CHECK(c.value()[0] == 11);
    CHECK(c.value()[5] == 32);
    CHECK_THROWS_AS(Var(Tensor({2, 3})) + Var(Tensor({4})), ShapeError);
}

TEST_CASE("unary gradients") {
    Var x = random_var({3, 4}, 3);
    Var p = random_var({3, 4}, 4, 0.2, 2.0);
    expect_grad(x, [&] { return probe(exp(x)); });
    expect_grad(p, [&] { return probe(log(p)); });
    expect_grad(x, [&] { return probe(sigmoid(x)); });
    expect_grad(x, [&] { return probe(relu(x)); });
    expect_grad(x, [&] { return probe(leaky_relu(x, 0.2)); });
    expect_grad(x, [&] { return probe(tanh(x)); });
    expect_grad(x, [&] { return probe(abs(x)); });
    expect_grad(x, [&] { return probe(square(x)); });
    expect_grad(p, [&] { return probe(sqrt(p)); });
    expect_grad(x, [&] { return probe(clamp(x, -0.5, 0.5)); });
}

TEST_CASE("sigmoid is stable for large inputs") {
    Var x(Tensor({2}, {-800.0, 800.0}));
    const Var y = sigmoid(x);
    CHECK(y.value()[0] == doctest::Approx(0.0));
    CHECK(y.value()[1] == doctest::Approx(1.0));
    CHECK(y.value().all_finite());
}

TEST_CASE("reduction gradients") {
    Var x = random_var({2, 3, 4}, 5);
    expect_grad(x, [&] { return sum(x) * sum(x); });
    expect_grad(x, [&] { return mean(x) * mean(x); });
    expect_grad(x, [&] { return probe(sum(x, {1})); });
    expect_grad(x, [&] { return probe(mean(x, {0, 2}, true)); });
    expect_grad(x, [&] { return probe(max(x, 2)); });
    expect_grad(x, [&] { return probe(max(x, 0, true)); });
    CHECK(sum(x, {0, 1, 2}).value().item() == doctest::Approx(sum(x).item()));
}

TEST_CASE("layout gradients") {
    Var x = random_var({2, 3, 4}, 6);
    Var y = random_var({2, 2, 4}, 7);
    expect_grad(x, [&] { return probe(reshape(x, {4, -1})); });
    expect_grad(x, [&] { return probe(permute(x, {2, 0, 1})); });
    expect_grad(x, [&] { return probe(concat({x, y}, 1)); });
    expect_grad(y, [&] { return probe(concat({x, y}, 1)); });
    expect_grad(x, [&] { return probe(slice(x, 2, 1, 2)); });
    const Var p = permute(x, {2, 0, 1});
    CHECK(p.shape() == Shape{4, 2, 3});
    CHECK(p.value()[1] == x.value()[4]);
}

TEST_CASE("matmul matches a naive product and differentiates") {
    Var a = random_var({3, 4}, 8);
    Var b = random_var({4, 2}, 9);
    const Var c = matmul(a, b);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 2; ++j) {
            double s = 0;
            for (int k = 0; k < 4; ++k) s += a.value()[i * 4 + k] * b.value()[k * 2 + j];
            CHECK(c.value()[i * 2 + j] == doctest::Approx(s));
        }
    }
    expect_grad(a, [&] { return probe(matmul(a, b)); });
    expect_grad(b, [&] { return probe(matmul(a, b)); });
    Var at = random_var({4, 3}, 10);
    Var bt = random_var({2, 4}, 11);
    expect_grad(at, [&] { return probe(matmul(at, bt, true, true)); });
    expect_grad(bt, [&] { return probe(matmul(at, bt, true, true)); });
    Var ba = random_var({2, 3, 4}, 12);
    Var bb = random_var({2, 3, 5}, 13);
    expect_grad(ba, [&] { return probe(matmul(ba, bb, true, false)); });
    expect_grad(bb, [&] { return probe(matmul(ba, bb, true, false)); });
}

TEST_CASE("softmax rows sum to one and differentiate") {
    Var x = random_var({3, 5}, 14, -3, 3);
    const Var s = softmax(x);
    for (int r = 0; r < 3; ++r) {
        double total = 0;
        for (int c = 0; c < 5; ++c) total += s.value()[r * 5 + c];
        CHECK(total == doctest::Approx(1.0));
    }
    expect_grad(x, [&] { return probe(softmax(x)); });
    expect_grad(x, [&] { return probe(log_softmax(x)); });
}

TEST_CASE("conv2d matches direct convolution") {
    Var x = random_var({2, 3, 5, 6}, 15);
    Var w = random_var({4, 3, 3, 3}, 16);
    Var b = random_var({4}, 17);
    const Var y = conv2d(x, w, b, 2, 1);
    REQUIRE(y.shape() == Shape{2, 4, 3, 3});
    auto xv = [&](int n, int c, int i, int j) -> double {
        if (i < 0 || j < 0 || i >= 5 || j >= 6) return 0.0;
        return x.value()[((n * 3 + c) * 5 + i) * 6 + j];
    };
    for (int n = 0; n < 2; ++n) {
        for (int o = 0; o < 4; ++o) {
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) {
                    double s = b.value()[o];
                    for (int c = 0; c < 3; ++c)
                        for (int ki = 0; ki < 3; ++ki)
                            for (int kj = 0; kj < 3; ++kj)
                                s += w.value()[((o * 3 + c) * 3 + ki) * 3 + kj] * xv(n, c, i * 2 + ki - 1, j * 2 + kj - 1);
                    CHECK(y.value()[((n * 4 + o) * 3 + i) * 3 + j] == doctest::Approx(s));
                }
            }
        }
    }
    expect_grad(x, [&] { return probe(conv2d(x, w, b, 2, 1)); });
    expect_grad(w, [&] { return probe(conv2d(x, w, b, 2, 1)); });
    expect_grad(b, [&] { return probe(conv2d(x, w, b, 2, 1)); });
    expect_grad(x, [&] { return probe(conv2d(x, w, Var(), 1, 0)); });
}

TEST_CASE("conv3d gradients") {
    Var x = random_var({1, 2, 3, 5, 5}, 18);
    Var w = random_var({3, 2, 3, 3, 3}, 19);
    Var b = random_var({3}, 20);
    const Var y = conv3d(x, w, b, {1, 2, 2}, {1, 1, 1});
    CHECK(y.shape() == Shape{1, 3, 3, 3, 3});
    expect_grad(x, [&] { return probe(conv3d(x, w, b, {1, 2, 2}, {1, 1, 1})); });
    expect_grad(w, [&] { return probe(conv3d(x, w, b, {1, 2, 2}, {1, 1, 1})); });
    expect_grad(b, [&] { return probe(conv3d(x, w, b, {1, 2, 2}, {1, 1, 1})); });
}

TEST_CASE("upsample and replicate padding") {
    Var x = random_var({1, 2, 3, 3}, 21);
    const Var u = upsample_nearest2d(x, 2);
    CHECK(u.shape() == Shape{1, 2, 6, 6});
    CHECK(u.value()[7] == x.value()[0]);
    const Var p = pad_replicate2d(x, 2);
    CHECK(p.shape() == Shape{1, 2, 7, 7});
    CHECK(p.value()[0] == x.value()[0]);
    CHECK(p.value()[6] == x.value()[2]);
    expect_grad(x, [&] { return probe(upsample_nearest2d(x, 2)); });
    expect_grad(x, [&] { return probe(pad_replicate2d(x, 2)); });
}

TEST_CASE("flow_warp samples bilinearly and differentiates") {
    Var img = random_var({1, 2, 5, 6}, 22);
    Tensor zero({1, 2, 5, 6}, 0.0);
    CHECK(flow_warp(img, Var(zero)).value() == img.value());

    Tensor shift({1, 2, 5, 6}, 0.0);
    for (int i = 0; i < 30; ++i) shift[i] = 1.0;  // u = 1
    const Var w = flow_warp(img, Var(shift));
    CHECK(w.value()[0] == doctest::Approx(img.value()[1]));
    CHECK(w.value()[5] == doctest::Approx(img.value()[5]));  // border clamp

    Var flow = random_var({1, 2, 5, 6}, 23, -1.3, 1.3);
    expect_grad(img, [&] { return probe(flow_warp(img, flow)); });
    expect_grad(flow, [&] { return probe(flow_warp(img, flow)); }, 1e-4);
}

TEST_CASE("no-grad guard produces constants") {
    Var x = random_var({3}, 24);
    {
        NoGradGuard guard;
        CHECK_FALSE((x * 2.0).requires_grad());
    }
    CHECK((x * 2.0).requires_grad());
    CHECK_FALSE(x.detach().requires_grad());
}

TEST_CASE("gradients accumulate across shared subexpressions") {
    Var x(Tensor({1}, {3.0}), true);
    const Var y = x * x + x;
    y.backward();
    CHECK(x.grad()[0] == doctest::Approx(7.0));
}

TEST_CASE("adam converges on a quadratic") {
    Var x(Tensor({2}, {3.0, -2.0}), true);
    Adam opt({x}, AdamConfig{0.1});
    for (int i = 0; i < 500; ++i) {
        opt.zero_grad();
        sum(square(x - 1.0)).backward();
        opt.step();
    }
    CHECK(x.value()[0] == doctest::Approx(1.0).epsilon(1e-2));
    CHECK(x.value()[1] == doctest::Approx(1.0).epsilon(1e-2));
    CHECK(opt.steps() == 500);
}

TEST_CASE("adam first step moves each coordinate by lr") {
    Var x(Tensor({2}, {0.0, 0.0}), true);
    Adam opt({x}, AdamConfig{0.01});
    sum(x * Var(Tensor({2}, {5.0, -0.3}))).backward();
    opt.step();
    CHECK(x.value()[0] == doctest::Approx(-0.01));
    CHECK(x.value()[1] == doctest::Approx(0.01));
}

TEST_CASE("spectral norm divides by the leading singular value") {
    Rng rng(5);
    Var w(Tensor({2, 2}, {3.0, 0.0, 0.0, 1.0}), true);
    SpectralNorm sn(w, rng);
    for (int i = 0; i < 30; ++i) sn.power_iteration();
    CHECK(sn.sigma() == doctest::Approx(3.0).epsilon(1e-6));
    const Var n = sn.normalized();
    CHECK(n.value()[0] == doctest::Approx(1.0).epsilon(1e-6));
    Var w2 = random_var({3, 2, 2}, 25);
    SpectralNorm sn2(w2, rng);
    sn2.power_iteration();
    expect_grad(w2, [&] { return probe(sn2.normalized()); });
}

TEST_CASE("layers register parameters with expected shapes") {
    Rng rng(1);
    ParamStore store;
    Conv2d c(store, "enc.c1", 4, 8, 3, 1, 1, rng);
    Linear l(store, "head", 8, 5, rng);
    Conv3d d(store, "disc.c1", 3, 4, {3, 5, 5}, {1, 2, 2}, {1, 2, 2}, rng);
    CHECK(store.get("enc.c1.weight").shape() == Shape{8, 4, 3, 3});
    CHECK(store.get("head.weight").shape() == Shape{8, 5});
    CHECK(store.get("disc.c1.weight").shape() == Shape{4, 3, 3, 5, 5});
    CHECK(store.total_size() == 8 * 4 * 9 + 8 + 40 + 5 + 4 * 3 * 75 + 4);
    CHECK_THROWS(store.add("head.weight", Tensor({1})));
    const Var y = l(random_var({2, 8}, 3));
    CHECK(y.shape() == Shape{2, 5});
}

TEST_CASE("checkpoint round trip restores every array") {
    Rng rng(2);
    ParamStore a;
    Conv2d c(a, "c", 2, 3, 3, 1, 1, rng);
    Linear l(a, "l", 3, 2, rng);
    FlatConfig meta;
    meta.set("model", "test");
    voin::testing::TempDir dir;
    save_checkpoint(dir / "m.ckpt", a, meta);

    Rng other(77);
    ParamStore b;
    Conv2d c2(b, "c", 2, 3, 3, 1, 1, other);
    Linear l2(b, "l", 3, 2, other);
    const Checkpoint ck = read_checkpoint(dir / "m.ckpt");
    CHECK(ck.meta.get_string("model", "") == "test");
    load_into(b, ck);
    for (std::size_t i = 0; i < a.entries().size(); ++i) {
        CHECK(a.entries()[i].var.value() == b.entries()[i].var.value());
    }

    ParamStore wrong;
    Conv2d c3(wrong, "c", 2, 4, 3, 1, 1, other);
    CHECK_THROWS(load_into(wrong, ck));

    const std::string bytes = voin::testing::read_file(dir / "m.ckpt");
    CHECK(bytes.substr(0, 8) == "VOINCKPT");
    {
        std::ofstream out(dir / "bad.ckpt", std::ios::binary);
        out << "NOTACKPT" << bytes.substr(8);
    }
    CHECK_THROWS_AS(read_checkpoint(dir / "bad.ckpt"), FormatError);
}

TEST_CASE("channel norm: zero mean and unit variance per position, gradients") {
    ParamStore store;
    ChannelNorm norm(store, "n", 5);
    const Var x = random_var({2, 5, 3, 3}, 41, -2.0, 3.0);
    const Tensor y = norm(x).value();
    for (std::int64_t n = 0; n < 2; ++n)
        for (std::int64_t p = 0; p < 9; ++p) {
            double m = 0, v = 0;
            for (std::int64_t c = 0; c < 5; ++c) m += y[(n * 5 + c) * 9 + p] / 5;
            for (std::int64_t c = 0; c < 5; ++c) v += (y[(n * 5 + c) * 9 + p] - m) * (y[(n * 5 + c) * 9 + p] - m) / 5;
            CHECK(m == doctest::Approx(0.0).epsilon(1e-12));
            CHECK(v == doctest::Approx(1.0).epsilon(1e-4));
        }
    auto loss = [&] { return sum(probe(norm(x))); };
    CHECK(check_gradient(x, loss, 1e-6).max_rel < 1e-5);
    for (const auto& p : store.entries()) CHECK(check_gradient(p.var, loss, 1e-6).max_rel < 1e-5);
}
