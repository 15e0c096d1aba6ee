#include <catch2/catch_amalgamated.hpp>

#include "relsym/nn.hpp"
#include "relsym/rng.hpp"
#include "relsym/tensor.hpp"

using namespace relsym;

namespace {

Tensor& add_random_param(ParameterSet& ps, const std::string& path, std::size_t r, std::size_t c,
                         Rng& rng, double lo = 0.2, double hi = 1.5) {
    Tensor& t = ps.add_zeros(path, r, c);
    for (double& v : t.data_mut()) {
        v = rng.uniform(lo, hi);
        if (rng.coin()) v = -v;
    }
    return t;
}

/// Fixed random positive weights used to reduce an op output to a scalar
/// probe with non-uniform sensitivities.
Tensor probe_weights(std::size_t r, std::size_t c, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> w(r * c);
    for (double& v : w) v = rng.uniform(0.25, 2.0);
    return Tensor::make(r, c, std::move(w));
}

} // namespace

TEST_CASE("matmul forward examples") {
    // identity case
    Tensor eye = Tensor::make(2, 2, {1, 0, 0, 1});
    Tensor a = Tensor::make(2, 2, {1, 2, 3, 4});
    Tensor c = matmul(eye, a);
    CHECK(c.value() == std::vector<double>{1, 2, 3, 4});

    // unit selection
    Tensor row = Tensor::make(1, 2, {1, 0});
    Tensor col = Tensor::make(2, 1, {5, 7});
    CHECK(matmul(row, col).item() == 5.0);
}

TEST_CASE("matmul shape mismatch names both shapes") {
    Tensor a = Tensor::zeros(3, 4);
    Tensor b = Tensor::zeros(5, 2);
    try {
        matmul(a, b);
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("3x4") != std::string::npos);
        CHECK(msg.find("5x2") != std::string::npos);
    }
}

TEST_CASE("matmul gradient of sum vs central finite differences") {
    ParameterSet ps(11);
    Rng rng(42);
    add_random_param(ps, "a", 3, 4, rng);
    add_random_param(ps, "b", 4, 2, rng);
    auto f = [&] { return sum(matmul(ps.at("a"), ps.at("b"))); };
    auto report = grad_check(f, ps, 1e-5);
    CHECK(report.max_rel_err < 1e-6);
}

TEST_CASE("per-primitive gradients match finite differences within 1e-6") {
    // sum is verified by hand first (grad of sum(theta) is all ones), then
    // used as the reducer for the remaining primitives.
    {
        ParameterSet ps(1);
        Rng rng(7);
        Tensor& t = add_random_param(ps, "theta", 2, 3, rng);
        ps.zero_grad();
        backward(sum(t));
        for (double g : t.grad()) CHECK(g == 1.0);
        auto report = grad_check([&] { return sum(ps.at("theta")); }, ps, 1e-5);
        CHECK(report.max_rel_err < 1e-6);
    }

    struct Case {
        const char* name;
        std::function<Tensor(ParameterSet&)> build;
        std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> shapes;
    };

    const Tensor probe34 = probe_weights(3, 4, 99);
    const Tensor probe33 = probe_weights(3, 3, 98);
    const Tensor probe43 = probe_weights(4, 3, 97);
    const Tensor probe11 = probe_weights(1, 1, 96);
    const Tensor probe38 = probe_weights(3, 8, 95);
    const Tensor probe64 = probe_weights(6, 4, 94);
    const Tensor probe22 = probe_weights(2, 2, 93);

    std::vector<Case> cases = {
        {"matmul", [&](ParameterSet& ps) {
             return sum(mul(matmul(ps.at("a"), ps.at("b")), probe33));
         }, {{"a", {3, 4}}, {"b", {4, 3}}}},
        {"add", [&](ParameterSet& ps) {
             return sum(mul(add(ps.at("a"), ps.at("b")), probe34));
         }, {{"a", {3, 4}}, {"b", {3, 4}}}},
        {"sub", [&](ParameterSet& ps) {
             return sum(mul(sub(ps.at("a"), ps.at("b")), probe34));
         }, {{"a", {3, 4}}, {"b", {3, 4}}}},
        {"mul", [&](ParameterSet& ps) {
             return sum(mul(mul(ps.at("a"), ps.at("b")), probe34));
         }, {{"a", {3, 4}}, {"b", {3, 4}}}},
        {"add_bias", [&](ParameterSet& ps) {
             return sum(mul(add_bias(ps.at("a"), ps.at("b")), probe34));
         }, {{"a", {3, 4}}, {"b", {1, 4}}}},
        {"scale", [&](ParameterSet& ps) {
             return sum(mul(scale(ps.at("a"), -2.5), probe34));
         }, {{"a", {3, 4}}}},
        {"relu", [&](ParameterSet& ps) {
             return sum(mul(relu(ps.at("a")), probe34));
         }, {{"a", {3, 4}}}},
        {"sigmoid", [&](ParameterSet& ps) {
             return sum(mul(sigmoid(ps.at("a")), probe34));
         }, {{"a", {3, 4}}}},
        {"square", [&](ParameterSet& ps) {
             return sum(mul(square(ps.at("a")), probe34));
         }, {{"a", {3, 4}}}},
        {"mean", [&](ParameterSet& ps) {
             return mean(mul(ps.at("a"), probe34));
         }, {{"a", {3, 4}}}},
        {"transpose", [&](ParameterSet& ps) {
             return sum(mul(transpose(ps.at("a")), probe43));
         }, {{"a", {3, 4}}}},
        {"concat_cols", [&](ParameterSet& ps) {
             return sum(mul(concat_cols({ps.at("a"), ps.at("b")}), probe38));
         }, {{"a", {3, 4}}, {"b", {3, 4}}}},
        {"concat_rows", [&](ParameterSet& ps) {
             return sum(mul(concat_rows({ps.at("a"), ps.at("b")}), probe64));
         }, {{"a", {3, 4}}, {"b", {3, 4}}}},
        {"slice_rows", [&](ParameterSet& ps) {
             return sum(mul(slice_rows(ps.at("a"), 1, 3), probe22));
         }, {{"a", {4, 2}}}},
        {"slice_cols", [&](ParameterSet& ps) {
             return sum(mul(slice_cols(ps.at("a"), 1, 3), probe22));
         }, {{"a", {2, 4}}}},
        {"reshape", [&](ParameterSet& ps) {
             return sum(mul(reshape(ps.at("a"), 4, 3), probe43));
         }, {{"a", {3, 4}}}},
        {"gather_rows", [&](ParameterSet& ps) {
             return sum(mul(gather_rows(ps.at("a"), {2, 0, 2}), probe33));
         }, {{"a", {3, 3}}}},
        {"softmax_rows", [&](ParameterSet& ps) {
             return sum(mul(softmax_rows(ps.at("a")), probe34));
         }, {{"a", {3, 4}}}},
    };

    for (auto& c : cases) {
        CAPTURE(c.name);
        ParameterSet ps(5);
        Rng rng(fnv1a64(c.name));
        for (auto& [path, shape] : c.shapes)
            add_random_param(ps, path, shape.first, shape.second, rng);
        auto report = grad_check([&] { return c.build(ps); }, ps, 1e-5);
        CHECK(report.max_rel_err < 1e-6);
    }
}

TEST_CASE("backward basics") {
    SECTION("loss = sum(theta) gives all-ones gradient") {
        ParameterSet ps(3);
        Rng rng(1);
        Tensor& t = add_random_param(ps, "theta", 2, 2, rng);
        ps.zero_grad();
        backward(sum(t));
        CHECK(t.grad() == std::vector<double>(4, 1.0));
    }
    SECTION("loss = sum(theta^2) gives 2*theta") {
        ParameterSet ps(3);
        Rng rng(2);
        Tensor& t = add_random_param(ps, "theta", 2, 3, rng);
        ps.zero_grad();
        backward(sum(square(t)));
        auto g = t.grad();
        for (std::size_t i = 0; i < g.size(); ++i)
            CHECK(g[i] == Catch::Approx(2.0 * t.value()[i]).epsilon(1e-14));
    }
    SECTION("non-scalar loss is a contract error") {
        Tensor t = Tensor::zeros(2, 2, true);
        CHECK_THROWS_AS(backward(add(t, t)), ContractError);
    }
    SECTION("unreachable parameters keep zero gradient") {
        ParameterSet ps(4);
        Rng rng(3);
        Tensor& used = add_random_param(ps, "used", 1, 2, rng);
        Tensor& unused = add_random_param(ps, "unused", 1, 2, rng);
        ps.zero_grad();
        backward(sum(used));
        CHECK(unused.grad() == std::vector<double>{0.0, 0.0});
    }
}

TEST_CASE("backward is linear in the loss") {
    Rng rng(2024);
    ParameterSet ps(6);
    add_random_param(ps, "x", 2, 3, rng);
    add_random_param(ps, "y", 3, 2, rng);

    auto l1 = [&] { return sum(matmul(ps.at("x"), ps.at("y"))); };
    auto l2 = [&] { return sum(square(ps.at("x"))); };
    const double a = 1.75, b = -0.5;

    ps.zero_grad();
    backward(add(scale(l1(), a), scale(l2(), b)));
    auto combined = ps.at("x").grad();

    ps.zero_grad();
    backward(l1());
    auto g1 = ps.at("x").grad();
    ps.zero_grad();
    backward(l2());
    auto g2 = ps.at("x").grad();

    for (std::size_t i = 0; i < combined.size(); ++i)
        CHECK(combined[i] == Catch::Approx(a * g1[i] + b * g2[i]).margin(1e-12));
}

TEST_CASE("repeated backward accumulates into leaves") {
    ParameterSet ps(8);
    Rng rng(5);
    Tensor& t = add_random_param(ps, "theta", 1, 3, rng);
    ps.zero_grad();
    backward(sum(t));
    backward(sum(t));
    CHECK(t.grad() == std::vector<double>(3, 2.0));
}

TEST_CASE("forward results are bit-identical across runs with the same seed") {
    auto run = [] {
        Rng rng(123);
        ParameterSet ps(123);
        std::vector<std::size_t> widths{5, 16, 16, 3};
        init_mlp(ps, "net", widths);
        std::vector<double> x(4 * 5);
        for (double& v : x) v = rng.uniform(-1, 1);
        Tensor in = Tensor::make(4, 5, std::move(x));
        return mlp_forward(ps, "net", in, widths).value();
    };
    CHECK(run() == run());
}

TEST_CASE("canonical_sum is order independent") {
    std::vector<double> vals{1e16, 1.0, -1e16, 3.125e-7, 0.1, -0.25};
    std::vector<double> perm = vals;
    std::vector<double> results;
    Rng rng(9);
    for (int i = 0; i < 50; ++i) {
        shuffle(perm, rng);
        results.push_back(canonical_sum(perm));
    }
    for (double r : results) CHECK(r == results[0]);
}
