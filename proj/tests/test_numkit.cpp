#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "test_util.hpp"
#include "tzsl/matrix.hpp"
#include "tzsl/mlp.hpp"
#include "tzsl/optim.hpp"
#include "tzsl/rng.hpp"

using namespace tzsl;

TEST_CASE("matrix algebra basics") {
    const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
    const Matrix b = Matrix::from_rows({{5, 6}, {7, 8}});
    const Matrix ab = matmul(a, b);
    CHECK(ab(0, 0) == doctest::Approx(19));
    CHECK(ab(1, 1) == doctest::Approx(50));

    const Matrix at_b = matmul_tn(a, b);
    const Matrix expect = matmul(transpose(a), b);
    for (std::size_t i = 0; i < 4; ++i) CHECK(at_b.values()[i] == expect.values()[i]);

    const Matrix a_bt = matmul_nt(a, b);
    const Matrix expect2 = matmul(a, transpose(b));
    for (std::size_t i = 0; i < 4; ++i) CHECK(a_bt.values()[i] == expect2.values()[i]);

    CHECK_THROWS_AS(matmul(a, Matrix(3, 3)), std::invalid_argument);
    CHECK_THROWS_AS(hconcat(a, Matrix(3, 1)), std::invalid_argument);
}

TEST_CASE("matrix operations keep entries finite on finite input") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const Matrix a = rng.normal_matrix(5, 7);
        const Matrix b = rng.normal_matrix(7, 3);
        CHECK(matmul(a, b).all_finite());
        CHECK(transpose(a).all_finite());
        CHECK(col_sums(a).all_finite());
    }
}

TEST_CASE("rng streams are reproducible for one million draws") {
    Rng a(123), b(123);
    for (int i = 0; i < 1000000; ++i) {
        if (a.next_u64() != b.next_u64()) {
            FAIL("stream diverged at draw ", i);
        }
    }
    Rng c(124);
    CHECK(Rng(123).next_u64() != c.next_u64());
}

TEST_CASE("rng normal moments") {
    Rng rng(99);
    const std::size_t n = 100000;
    double mean = 0.0, var = 0.0;
    std::vector<double> draws(n);
    for (auto& d : draws) d = rng.normal();
    for (double d : draws) mean += d;
    mean /= n;
    for (double d : draws) var += (d - mean) * (d - mean);
    var /= n;
    // 3 sigma bands: sd of sample mean is 1/sqrt(n)
    CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / static_cast<double>(n)));
}

TEST_CASE("mlp2_forward identity network") {
    Mlp2Params p;
    p.W1 = Matrix::from_rows({{1, 0}, {0, 1}});
    p.b1 = Matrix(1, 2);
    p.W2 = Matrix::from_rows({{1, 0}, {0, 1}});
    p.b2 = Matrix(1, 2);
    p.slope = 1.0;
    const Matrix y = mlp2_forward(p, Matrix::from_rows({{1, 2}}));
    CHECK(y(0, 0) == doctest::Approx(1));
    CHECK(y(0, 1) == doctest::Approx(2));
}

TEST_CASE("mlp2_forward single leaky unit") {
    Mlp2Params p;
    p.W1 = Matrix::from_rows({{1}});
    p.b1 = Matrix(1, 1);
    p.W2 = Matrix::from_rows({{1}});
    p.b2 = Matrix(1, 1);
    p.slope = 0.2;
    const Matrix y = mlp2_forward(p, Matrix::from_rows({{-1}}));
    CHECK(y(0, 0) == doctest::Approx(-0.2));
}

TEST_CASE("mlp2_forward matches a scalar loop oracle") {
    Rng rng(41);
    const Matrix x = rng.normal_matrix(3, 4);
    const Mlp2Params p = Mlp2Params::init(4, 5, 2, 0.2, rng);
    const Matrix y = mlp2_forward(p, x);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t o = 0; o < 2; ++o) {
            double acc = p.b2(0, o);
            for (std::size_t h = 0; h < 5; ++h) {
                double u = p.b1(0, h);
                for (std::size_t j = 0; j < 4; ++j) u += p.W1(h, j) * x(i, j);
                const double act = u >= 0 ? u : 0.2 * u;
                acc += p.W2(o, h) * act;
            }
            CHECK(y(i, o) == doctest::Approx(acc).epsilon(1e-12));
        }
    }
}

TEST_CASE("mlp2_forward is deterministic") {
    Rng rng(5);
    const Matrix x = rng.normal_matrix(4, 3);
    const Mlp2Params p = Mlp2Params::init(3, 6, 2, 0.2, rng);
    const Matrix y1 = mlp2_forward(p, x);
    const Matrix y2 = mlp2_forward(p, x);
    for (std::size_t i = 0; i < y1.size(); ++i) CHECK(y1.values()[i] == y2.values()[i]);
}

TEST_CASE("mlp2_grads identity case and zero dY") {
    Mlp2Params p;
    p.W1 = Matrix::from_rows({{1, 0}, {0, 1}});
    p.b1 = Matrix(1, 2);
    p.W2 = Matrix::from_rows({{1, 0}, {0, 1}});
    p.b2 = Matrix(1, 2);
    p.slope = 1.0;
    Mlp2Cache cache;
    mlp2_forward(p, Matrix::from_rows({{2, 3}}), &cache);
    const Mlp2Backward back = mlp2_grads(p, cache, Matrix::from_rows({{1, 0}}));
    CHECK(back.input(0, 0) == doctest::Approx(1));
    CHECK(back.input(0, 1) == doctest::Approx(0));

    const Mlp2Backward zero = mlp2_grads(p, cache, Matrix(1, 2));
    for (const Matrix* g : zero.params.list())
        for (double v : g->values()) CHECK(v == 0.0);
}

TEST_CASE("mlp2_grads rejects a stale cache") {
    Rng rng(11);
    Mlp2Params p = Mlp2Params::init(3, 4, 2, 0.2, rng);
    Mlp2Cache cache;
    mlp2_forward(p, rng.normal_matrix(2, 3), &cache);
    p.W1(0, 0) += 1.0;
    CHECK_THROWS_AS(mlp2_grads(p, cache, Matrix(2, 2)), std::logic_error);
}

TEST_CASE("mlp2_grads finite-difference check, 100 random cases") {
    Rng rng(2024);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t d_in = 2 + rng.uniform_index(4);
        const std::size_t hidden = 2 + rng.uniform_index(5);
        const std::size_t d_out = 1 + rng.uniform_index(3);
        Matrix x = testing::random_inputs(3, d_in, rng);
        Mlp2Params p = testing::random_mlp_away_from_kinks(d_in, hidden, d_out, 0.2, rng, x);
        const Matrix dY = rng.normal_matrix(3, d_out);

        Mlp2Cache cache;
        mlp2_forward(p, x, &cache);
        const Mlp2Backward back = mlp2_grads(p, cache, dY);

        const auto value = [&] { return dot(dY, mlp2_forward(p, x)); };
        for (Matrix* param : p.param_list()) {
            const Matrix* analytic = param == &p.W1   ? &back.params.dW1
                                     : param == &p.b1 ? &back.params.db1
                                     : param == &p.W2 ? &back.params.dW2
                                                      : &back.params.db2;
            worst = std::max(worst, testing::check_gradient(*param, *analytic, value).max_rel_err);
        }
        worst = std::max(worst, testing::check_gradient(x, back.input, value).max_rel_err);
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("critic_input_gradient closed forms") {
    SUBCASE("affine critic: gradient is (W2 W1)^T for every input") {
        Rng rng(3);
        Mlp2Params p = Mlp2Params::init(4, 3, 1, 1.0, rng);  // slope 1 = affine
        const Matrix expect = matmul(p.W2, p.W1);            // 1 x d_in
        const Matrix g = critic_input_gradient(p, rng.normal_matrix(5, 4));
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 4; ++j)
                CHECK(g(i, j) == doctest::Approx(expect(0, j)).epsilon(1e-12));
    }
    SUBCASE("1-D unit net at x=-1: gradient is slope * W2 * W1") {
        Mlp2Params p;
        p.W1 = Matrix::from_rows({{1.5}});
        p.b1 = Matrix(1, 1);
        p.W2 = Matrix::from_rows({{2.0}});
        p.b2 = Matrix(1, 1);
        p.slope = 0.2;
        const Matrix g = critic_input_gradient(p, Matrix::from_rows({{-1.0}}));
        CHECK(g(0, 0) == doctest::Approx(0.2 * 2.0 * 1.5));
    }
    SUBCASE("matches finite differences of D(x) in x") {
        Rng rng(17);
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            Matrix x = testing::random_inputs(2, 4, rng);
            Mlp2Params p = testing::random_mlp_away_from_kinks(4, 5, 1, 0.2, rng, x);
            const Matrix analytic = critic_input_gradient(p, x);
            for (std::size_t row = 0; row < x.rows(); ++row) {
                // d/dx of D at one row: isolate by summing that row's output
                Matrix xi = take_row(x, row);
                Matrix gi = take_row(analytic, row);
                const auto value = [&] { return sum(mlp2_forward(p, xi)); };
                worst = std::max(worst,
                                 testing::check_gradient(xi, gi, value).max_rel_err);
            }
        }
        CHECK(worst < 1e-6);
    }
    SUBCASE("requires scalar output") {
        Rng rng(9);
        Mlp2Params p = Mlp2Params::init(3, 4, 2, 0.2, rng);
        CHECK_THROWS_AS(critic_input_gradient(p, Matrix(1, 3)), std::invalid_argument);
    }
}

TEST_CASE("gp_value_and_grads closed-form cases") {
    SUBCASE("unit-gradient affine critic has zero penalty and zero grads") {
        Mlp2Params p;
        p.W1 = Matrix::from_rows({{1, 0}, {0, 1}});
        p.b1 = Matrix(1, 2);
        p.W2 = Matrix::from_rows({{0.6, 0.8}});  // ||W2 W1|| = 1
        p.b2 = Matrix(1, 1);
        p.slope = 1.0;
        const GpResult r = gp_value_and_grads(p, Matrix(3, 2, 0.5), 10.0);
        CHECK(r.penalty == doctest::Approx(0.0).epsilon(1e-12));
        for (const Matrix* g : r.grads.list())
            for (double v : g->values()) CHECK(std::abs(v) < 1e-12);
    }
    SUBCASE("affine critic with gradient norm 2 gives penalty lambda_gp") {
        Mlp2Params p;
        p.W1 = Matrix::from_rows({{1, 0}, {0, 1}});
        p.b1 = Matrix(1, 2);
        p.W2 = Matrix::from_rows({{1.2, 1.6}});  // norm 2
        p.b2 = Matrix(1, 1);
        p.slope = 1.0;
        const GpResult r = gp_value_and_grads(p, Matrix(4, 2, -0.3), 10.0);
        CHECK(r.penalty == doctest::Approx(10.0).epsilon(1e-12));
    }
    SUBCASE("parameter gradients match finite differences of the penalty") {
        Rng rng(31);
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            Matrix xhat = testing::random_inputs(3, 4, rng);
            Mlp2Params p = testing::random_mlp_away_from_kinks(4, 5, 1, 0.2, rng, xhat);
            const GpResult r = gp_value_and_grads(p, xhat, 10.0);
            const auto value = [&] { return gp_value_and_grads(p, xhat, 10.0).penalty; };
            for (Matrix* param : p.param_list()) {
                const Matrix* analytic = param == &p.W1   ? &r.grads.dW1
                                         : param == &p.b1 ? &r.grads.db1
                                         : param == &p.W2 ? &r.grads.dW2
                                                          : &r.grads.db2;
                worst = std::max(worst,
                                 testing::check_gradient(*param, *analytic, value).max_rel_err);
            }
        }
        CHECK(worst < 1e-4);
    }
    SUBCASE("penalized column restriction excludes the condition block") {
        Rng rng(6);
        Matrix xhat = testing::random_inputs(4, 6, rng);
        Mlp2Params p = testing::random_mlp_away_from_kinks(6, 5, 1, 0.2, rng, xhat);
        const GpResult full = gp_value_and_grads(p, xhat, 10.0);
        const GpResult part = gp_value_and_grads(p, xhat, 10.0, 3);
        CHECK(full.penalty != doctest::Approx(part.penalty));
        // restricted penalty only sees the first three input-gradient columns
        const Matrix g = critic_input_gradient(p, xhat);
        double expect = 0.0;
        for (std::size_t i = 0; i < 4; ++i) {
            double norm = 0.0;
            for (std::size_t j = 0; j < 3; ++j) norm += g(i, j) * g(i, j);
            const double diff = std::sqrt(norm) - 1.0;
            expect += diff * diff;
        }
        CHECK(part.penalty == doctest::Approx(10.0 * expect / 4.0).epsilon(1e-12));
    }
}

TEST_CASE("adamw_step") {
    SUBCASE("zero gradients and zero weight decay leave parameters unchanged") {
        Matrix p(2, 2, 1.5);
        AdamWState state(AdamWConfig{}, {&p});
        const Matrix g(2, 2, 0.0);
        adamw_step(state, {&p}, {&g});
        for (double v : p.values()) CHECK(v == 1.5);
        CHECK(state.step == 1);
    }
    SUBCASE("first step matches a scalar recomputation") {
        AdamWConfig cfg;
        cfg.lr = 0.001;
        cfg.beta1 = 0.5;
        cfg.beta2 = 0.999;
        cfg.weight_decay = 0.0;
        Matrix p(1, 1, 0.7);
        AdamWState state(cfg, {&p});
        const Matrix g(1, 1, 1.0);
        adamw_step(state, {&p}, {&g});
        // scalar oracle
        const double m = (1 - 0.5) * 1.0;
        const double v = (1 - 0.999) * 1.0;
        const double m_hat = m / (1 - 0.5);
        const double v_hat = v / (1 - 0.999);
        const double expect = 0.7 - 0.001 * m_hat / (std::sqrt(v_hat) + cfg.eps);
        CHECK(p(0, 0) == doctest::Approx(expect).epsilon(1e-15));
    }
    SUBCASE("weight decay shrinks parameters by (1 - lr wd) under zero gradients") {
        AdamWConfig cfg;
        cfg.lr = 0.01;
        cfg.weight_decay = 0.1;
        Matrix p(1, 3, 2.0);
        AdamWState state(cfg, {&p});
        const Matrix g(1, 3, 0.0);
        adamw_step(state, {&p}, {&g});
        for (double v : p.values()) CHECK(v == doctest::Approx(2.0 * (1 - 0.01 * 0.1)));
    }
}
