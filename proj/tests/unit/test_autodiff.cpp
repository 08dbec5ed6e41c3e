#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "selftest.hpp"
#include "yowo/autodiff.hpp"
#include "yowo/error.hpp"

using namespace yowo;
using autodiff::Tape;
using autodiff::Value;
using autodiff::Var;
using numeric::FeatureMap;
using numeric::Matrix;
using numeric::PostOp;

TEST_CASE("tape conv gradient matches finite differences at zero weights") {
    Rng rng(1);
    numeric::ConvLayer L(3, 2, 2);
    const Value x = oracle::random_map(rng, 4, 4, 2);
    CHECK(oracle::tape_gradient_error({x}, [&](Tape& t, const std::vector<Var>& v) { return t.conv2d(v[0], L); }, {&L}, rng) < 1e-6);
}

TEST_CASE("every tape op agrees with finite differences") {
    for (int seed = 0; seed < 5; ++seed) {
        Rng rng(10 + seed);
        auto conv = oracle::random_conv(rng, 3, 2, 2, PostOp::silu, true, 2);
        const Value x = oracle::random_map(rng, 4, 4, 2);
        const Value y = oracle::random_map(rng, 4, 4, 2);
        const Value a = oracle::random_matrix(rng, 3, 4);
        const Value b = oracle::random_matrix(rng, 4, 2);
        const auto t1 = [&](Tape& t, const std::vector<Var>& v) { return t.conv2d(t.add(v[0], v[1]), conv); };
        CHECK(oracle::tape_gradient_error({x, y}, t1, {&conv}, rng) < 1e-6);
        const auto t2 = [](Tape& t, const std::vector<Var>& v) {
            return t.concat_channels(t.upsample_nearest(v[0], 2), t.upsample_nearest(v[1], 2));
        };
        CHECK(oracle::tape_gradient_error({x, y}, t2, {}, rng) < 1e-6);
        const auto t3 = [](Tape& t, const std::vector<Var>& v) { return t.softmax_rows(t.matmul(v[0], v[1])); };
        CHECK(oracle::tape_gradient_error({a, b}, t3, {}, rng) < 1e-6);
        const auto t4 = [](Tape& t, const std::vector<Var>& v) {
            const Var m = t.to_channel_matrix(v[0]);
            return t.from_channel_matrix(t.matmul(t.softmax_rows(t.matmul(m, t.transpose(m))), m), 4, 4);
        };
        CHECK(oracle::tape_gradient_error({x}, t4, {}, rng) < 1e-6);
    }
}

TEST_CASE("gradient of a constant output is zero") {
    Tape tape;
    const Var x = tape.input(FeatureMap(2, 2, 1, 1.0));
    numeric::ConvLayer L(1, 1, 1);
    L.bias = {3.0};
    const Var y = tape.conv2d(x, L);  // zero weights: output constant in x
    const std::vector<autodiff::Seed> seeds{{y, FeatureMap(2, 2, 1, 1.0)}};
    tape.backward(seeds);
    const auto grad = std::get<FeatureMap>(tape.gradient(x));
    for (double g : grad.data) CHECK(g == 0.0);
}

TEST_CASE("softmax gradient at a symmetric row is symmetric") {
    Tape tape;
    const Var x = tape.input(Matrix(1, 2, {0.0, 0.0}));
    const Var s = tape.softmax_rows(x);
    const std::vector<autodiff::Seed> seeds{{s, Matrix(1, 2, {1.0, -1.0})}};
    tape.backward(seeds);
    const auto g = std::get<Matrix>(tape.gradient(x));
    CHECK(g.data[0] == doctest::Approx(-g.data[1]));
    CHECK(g.data[0] == doctest::Approx(0.5));
}

TEST_CASE("tape rejects foreign variables and a second backward") {
    Tape a;
    Tape b;
    const Var x = a.input(Matrix(1, 1, {1.0}));
    CHECK_THROWS_AS(b.transpose(x), ContractViolation);
    const Var y = a.transpose(x);
    const std::vector<autodiff::Seed> seeds{{y, Matrix(1, 1, {1.0})}};
    a.backward(seeds);
    CHECK_THROWS_AS(a.backward(seeds), ContractViolation);
}

TEST_CASE("kink pattern records leaky-relu signs") {
    numeric::ConvLayer L(1, 1, 1, PostOp::leaky_relu);
    L.weights = {1.0};
    Tape tape;
    tape.conv2d(tape.input(FeatureMap(1, 3, 1, std::vector<double>{-1.0, 0.0, 2.0})), L);
    CHECK(tape.kink_pattern() == std::vector<bool>{false, true, true});
}
