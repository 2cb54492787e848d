#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "uavdt/neural.hpp"

#include <cmath>

using namespace uavdt;
using namespace uavdt::nn;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0)
{
    Tensor t(std::move(shape));
    std::normal_distribution<double> n(0.0, scale);
    for (auto& v : t.data)
        v = n(rng);
    return t;
}

// A shrunken desk net so that per-parameter finite differences stay cheap.
NetSpec tiny(int heads, int action_inputs, bool attention = true)
{
    NetSpec s;
    s.preset = "tiny";
    s.height = s.width = 6;
    s.branch_channels = {2, 3};
    s.fusion_channels = {4};
    s.attention = attention;
    s.attention_reduction = 2;
    s.shared_fc = {5};
    s.head_hidden = {3};
    s.heads = heads;
    s.action_inputs = action_inputs;
    s.head_activation = heads == 1 ? HeadActivation::Linear : HeadActivation::Tanh;
    return s;
}

double sum_product(const Tensor& a, const Tensor& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a.data[i] * b.data[i];
    return s;
}

} // namespace

TEST_CASE("dense layer: identity weights pass the input through")
{
    Dense d{3, 3, 0, 9};
    std::vector<double> p(12, 0.0);
    for (int i = 0; i < 3; ++i)
        p[static_cast<std::size_t>(i * 3 + i)] = 1.0;
    Tensor x({2, 3});
    x.data = {1, -2, 3, 0.5, 0, -7};
    Tensor y;
    dense_forward(d, p, x, y);
    CHECK(y.data == x.data);

    Tensor bad({2, 4});
    CHECK_THROWS_AS(dense_forward(d, p, bad, y), ContractError);
}

TEST_CASE("1x1 convolution scales each pixel")
{
    Conv2d c{1, 1, 1, 1, 0, 0, 1};
    const std::vector<double> p{2.0, 0.5};
    Rng rng(1);
    const Tensor x = random_tensor({2, 1, 4, 5}, rng);
    Tensor y;
    conv2d_forward(c, p, x, y);
    REQUIRE(y.shape == x.shape);
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(y.data[i] == doctest::Approx(2.0 * x.data[i] + 0.5));
}

TEST_CASE("layer gradients against central differences")
{
    Rng rng(2);
    const double eps = 1e-6;
    auto rel = [](double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6}); };

    SUBCASE("conv, stride 2 with padding")
    {
        Conv2d c{2, 3, 3, 2, 1, 0, 54};
        std::vector<double> p(57);
        for (auto& v : p)
            v = std::normal_distribution<double>(0.0, 0.5)(rng);
        Tensor x = random_tensor({2, 2, 5, 6}, rng);
        Tensor y;
        conv2d_forward(c, p, x, y);
        const Tensor w = random_tensor(y.shape, rng);
        std::vector<double> g(p.size(), 0.0);
        Tensor dx;
        conv2d_backward(c, p, x, w, g, &dx);
        double worst = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            auto q = p;
            q[i] += eps;
            Tensor a;
            conv2d_forward(c, q, x, a);
            q[i] -= 2 * eps;
            Tensor b;
            conv2d_forward(c, q, x, b);
            worst = std::max(worst, rel(g[i], (sum_product(a, w) - sum_product(b, w)) / (2 * eps)));
        }
        for (std::size_t i = 0; i < x.size(); ++i) {
            Tensor xp = x, xm = x;
            xp.data[i] += eps;
            xm.data[i] -= eps;
            Tensor a, b;
            conv2d_forward(c, p, xp, a);
            conv2d_forward(c, p, xm, b);
            worst = std::max(worst, rel(dx.data[i], (sum_product(a, w) - sum_product(b, w)) / (2 * eps)));
        }
        CHECK(worst < 1e-4);
    }

    SUBCASE("dense")
    {
        Dense d{4, 3, 0, 12};
        std::vector<double> p(15);
        for (auto& v : p)
            v = std::normal_distribution<double>(0.0, 0.5)(rng);
        const Tensor x = random_tensor({3, 4}, rng);
        Tensor y;
        dense_forward(d, p, x, y);
        const Tensor w = random_tensor(y.shape, rng);
        std::vector<double> g(p.size(), 0.0);
        Tensor dx;
        dense_backward(d, p, x, w, g, &dx);
        double worst = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            auto q = p;
            q[i] += eps;
            Tensor a;
            dense_forward(d, q, x, a);
            q[i] -= 2 * eps;
            Tensor b;
            dense_forward(d, q, x, b);
            worst = std::max(worst, rel(g[i], (sum_product(a, w) - sum_product(b, w)) / (2 * eps)));
        }
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("composed networks pass the gradient check")
{
    Rng rng(3);
    SUBCASE("actor with attention and tanh heads")
    {
        const Network net(tiny(3, 0));
        const auto p = net.init_params(rng);
        const Tensor s = random_tensor({2, 2, 6, 6}, rng);
        CHECK(gradient_check(net, p, s, nullptr, 1e-6, rng) < 1e-4);
    }
    SUBCASE("critic with action input, linear head")
    {
        const Network net(tiny(1, 3));
        const auto p = net.init_params(rng);
        const Tensor s = random_tensor({2, 2, 6, 6}, rng);
        const Tensor a = random_tensor({2, 3}, rng);
        CHECK(gradient_check(net, p, s, &a, 1e-6, rng) < 1e-4);
    }
    SUBCASE("without attention")
    {
        const Network net(tiny(2, 0, false));
        const auto p = net.init_params(rng);
        const Tensor s = random_tensor({3, 2, 6, 6}, rng);
        CHECK(gradient_check(net, p, s, nullptr, 1e-6, rng) < 1e-4);
    }
}

TEST_CASE("input gradient of the composed network")
{
    Rng rng(4);
    const Network net(tiny(1, 3));
    const auto p = net.init_params(rng);
    const Tensor s = random_tensor({1, 2, 6, 6}, rng);
    const Tensor a = random_tensor({1, 3}, rng);
    Tape tape;
    const Tensor out = net.forward(p, s, &a, &tape);
    const Tensor w({1, 1}, 1.0);
    const auto g = net.backward(p, tape, w, {false, true, false});
    REQUIRE(g.input.size() == s.size());
    REQUIRE(g.action.size() == 3);
    const double eps = 1e-6;
    for (std::size_t i = 0; i < s.size(); i += 7) {
        Tensor up = s, dn = s;
        up.data[i] += eps;
        dn.data[i] -= eps;
        const double num = (net.forward(p, up, &a, nullptr).data[0] - net.forward(p, dn, &a, nullptr).data[0]) / (2 * eps);
        CHECK(g.input.data[i] == doctest::Approx(num).epsilon(1e-4).scale(1e-6));
    }
    // The action-only path must agree with the full pass.
    const auto only = net.backward(p, tape, w, {false, false, true});
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(only.action.data[i] == doctest::Approx(g.action.data[i]));
}

TEST_CASE("attention gates stay in (0, 1) and keep the shape")
{
    Rng rng(5);
    const Network net(tiny(3, 0));
    const auto p = net.init_params(rng);
    Tape tape;
    const Tensor s = random_tensor({2, 2, 6, 6}, rng, 3.0);
    net.forward(p, s, nullptr, &tape);
    CHECK(tape.att_out.shape == tape.fused.shape);
    for (double g : tape.ca_gate.data)
        CHECK((g > 0.0 && g < 1.0));
    for (double g : tape.sa_gate.data)
        CHECK((g > 0.0 && g < 1.0));
}

TEST_CASE("tanh heads are bounded")
{
    Rng rng(6);
    const Network net(tiny(3, 0));
    const auto p = net.init_params(rng);
    const Tensor out = net.forward(p, random_tensor({4, 2, 6, 6}, rng, 50.0), nullptr, nullptr);
    CHECK(out.shape == std::vector<std::size_t>{4, 3});
    for (double v : out.data)
        CHECK((v >= -1.0 && v <= 1.0));
}

TEST_CASE("a tape is rejected after the parameters change")
{
    Rng rng(7);
    const Network net(tiny(1, 3));
    auto p = net.init_params(rng);
    const Tensor s = random_tensor({1, 2, 6, 6}, rng);
    const Tensor a = random_tensor({1, 3}, rng);
    Tape tape;
    net.forward(p, s, &a, &tape);
    AdamState opt(p.values.size(), 1e-3);
    adam_step(p, std::vector<double>(p.values.size(), 1.0), opt);
    CHECK_THROWS_AS(net.backward(p, tape, Tensor({1, 1}, 1.0)), ContractError);
}

TEST_CASE("Adam: first step moves each parameter by lr against the gradient sign")
{
    NetworkParams p;
    p.blocks.push_back({"w", {3}, 0, 3});
    p.values = {1.0, 1.0, 1.0};
    AdamState opt(3, 0.01);
    adam_step(p, std::vector<double>{2.0, -0.5, 0.0}, opt);
    CHECK(p.values[0] == doctest::Approx(0.99));
    CHECK(p.values[1] == doctest::Approx(1.01));
    CHECK(p.values[2] == 1.0);
    CHECK(opt.step == 1);
    CHECK_THROWS_AS(adam_step(p, std::vector<double>{1.0}, opt), ContractError);

    // Minimises a quadratic.
    NetworkParams q;
    q.blocks.push_back({"x", {1}, 0, 1});
    q.values = {5.0};
    AdamState o(1, 0.05);
    for (int i = 0; i < 2000; ++i)
        adam_step(q, std::vector<double>{2.0 * (q.values[0] - 2.0)}, o);
    CHECK(q.values[0] == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("soft update blends toward the online values")
{
    NetworkParams online, target;
    online.blocks = target.blocks = {{"w", {2}, 0, 2}};
    online.values = {1.0, -1.0};
    target.values = {0.0, 0.0};
    soft_update(target, online, 0.25);
    CHECK(target.values[0] == doctest::Approx(0.25));
    CHECK(target.values[1] == doctest::Approx(-0.25));

    NetworkParams other;
    other.blocks = {{"w", {3}, 0, 3}};
    other.values = {0, 0, 0};
    CHECK_THROWS_AS(soft_update(other, online, 0.5), ContractError);
}

TEST_CASE("desk and paper presets")
{
    const Network actor(NetSpec::desk_actor(20));
    const Network critic(NetSpec::desk_critic(20));
    CHECK(actor.param_count() > 0);
    CHECK(critic.param_count() > 0);
    Rng rng(8);
    const auto p = actor.init_params(rng);
    const Tensor out = actor.forward(p, random_tensor({2, 2, 20, 20}, rng), nullptr, nullptr);
    CHECK(out.shape == std::vector<std::size_t>{2, 3});

    // The paper preset is only shape-checked.
    const Network big(NetSpec::paper_actor(100));
    const auto lines = big.describe();
    REQUIRE_FALSE(lines.empty());
    bool pooled = false;
    for (const auto& l : lines)
        pooled = pooled || l.find("[2048]") != std::string::npos;
    CHECK(pooled);
}

TEST_CASE("checkpoint round trip and corruption")
{
    Rng rng(9);
    const Network net(tiny(3, 0));
    Checkpoint c;
    c.meta["k"] = "v";
    c.nets["actor"] = net.init_params(rng);
    const auto bytes = checkpoint_to_bytes(c);
    const auto back = checkpoint_from_bytes(bytes);
    CHECK(back.meta == c.meta);
    CHECK(back.nets.at("actor").values == c.nets.at("actor").values);
    CHECK(checkpoint_to_bytes(back) == bytes);

    CHECK_THROWS_AS(checkpoint_from_bytes(bytes.substr(0, bytes.size() / 2)), FormatError);
    CHECK_THROWS_AS(checkpoint_from_bytes("garbage"), FormatError);
    CHECK_THROWS_AS(checkpoint_from_bytes(bytes + "x"), FormatError);
    CHECK_THROWS_AS(read_checkpoint("/nonexistent/dir/ckpt.bin"), IoError);
}
