#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles/oracles.hpp"
#include "refsig/ckconv/causal_conv.hpp"
#include "refsig/ckconv/ckblock.hpp"
#include "refsig/ckconv/continuous_kernel.hpp"
#include "refsig/ckconv/whistle_net.hpp"
#include "refsig/nn/gradcheck.hpp"

using namespace refsig;
using namespace refsig::ckconv;
using nn::Tensor;

namespace {

Tensor<double> random_tensor(nn::Shape shape, Rng& rng) {
    Tensor<double> t(std::move(shape));
    for (auto& v : t.storage()) v = rng.normal();
    return t;
}

std::size_t count(auto& module) {
    nn::ParameterRefs<double> refs;
    module.collect(refs);
    return nn::total_parameter_count(refs);
}

}  // namespace

TEST(ContinuousKernel, ZeroWeightsGiveConstantKernel) {
    ContinuousKernel<double> k("k", 2, 3, 31);
    k.mlp_b3.value.fill(0.25);
    const auto kernel = k.materialize().output;
    ASSERT_EQ(kernel.shape(), (nn::Shape{31, 3, 2}));
    for (double v : kernel.storage()) EXPECT_EQ(v, 0.25);
}

TEST(ContinuousKernel, ThirtyOnePositionsSpanUnitInterval) {
    const auto pos = kernel_positions(31);
    ASSERT_EQ(pos.size(), 31u);
    EXPECT_DOUBLE_EQ(pos.front(), -1.0);
    EXPECT_DOUBLE_EQ(pos.back(), 1.0);
    EXPECT_DOUBLE_EQ(pos[15], 0.0);
    for (std::size_t i = 1; i < pos.size(); ++i) EXPECT_NEAR(pos[i] - pos[i - 1], 2.0 / 30.0, 1e-15);
}

TEST(ContinuousKernel, ParameterCounts) {
    ContinuousKernel<double> k32("k", 32, 32, 31);
    EXPECT_EQ(count(k32), (1u * 16 + 16) + (16u * 16 + 16) + (16u * 1024 + 1024));
    EXPECT_EQ(count(k32), 17712u);
    ContinuousKernel<double> k1("k", 1, 32, 31);
    EXPECT_EQ(count(k1), 848u);
}

TEST(ContinuousKernel, AllSixGroupsReceiveGradient) {
    Rng rng(1);
    CkConvLayer<double> layer("c", 2, 3, 31);
    layer.init(rng);
    for (auto* b : {&layer.kernel.mlp_b1, &layer.kernel.mlp_b2, &layer.kernel.mlp_b3})
        for (auto& v : b->value.storage()) v = 0.1 * rng.normal();
    const auto x = random_tensor({2, 2, 40}, rng);
    const auto r = random_tensor({2, 3, 40}, rng);
    nn::ParameterRefs<double> params;
    layer.collect(params);
    ASSERT_EQ(params.size(), 6u);
    auto f = layer.forward(x);
    layer.backward(f.trace, r);
    for (auto* p : params) {
        double norm = 0.0;
        for (double g : p->grad.storage()) norm += g * g;
        EXPECT_GT(norm, 0.0) << p->name;
    }
}

TEST(CausalConv, IdentityKernel) {
    Rng rng(2);
    const auto x = random_tensor({2, 3, 10}, rng);
    Tensor<double> k({5, 3, 3});
    for (std::size_t c = 0; c < 3; ++c) k.at(0, c, c) = 1.0;
    EXPECT_EQ(causal_conv(x, k), x);
}

TEST(CausalConv, ShiftKernel) {
    Rng rng(3);
    const auto x = random_tensor({1, 2, 8}, rng);
    Tensor<double> k({4, 2, 2});
    for (std::size_t c = 0; c < 2; ++c) k.at(1, c, c) = 1.0;
    const auto y = causal_conv(x, k);
    for (std::size_t c = 0; c < 2; ++c) {
        EXPECT_EQ(y.at(0, c, 0), 0.0);
        for (std::size_t t = 1; t < 8; ++t) EXPECT_EQ(y.at(0, c, t), x.at(0, c, t - 1));
    }
}

TEST(CausalConv, MatchesDoubleSumOracle) {
    Rng rng(4);
    for (int inst = 0; inst < 200; ++inst) {
        const std::size_t B = 1 + rng.below(3), C = 1 + rng.below(4), O = 1 + rng.below(4);
        const std::size_t L = 1 + rng.below(64), K = 1 + rng.below(40);
        const auto x = random_tensor({B, C, L}, rng);
        const auto k = random_tensor({K, O, C}, rng);
        const auto fast = causal_conv(x, k);
        const auto slow = oracle::causal_conv(x, k);
        double scale = 0.0, err = 0.0;
        for (std::size_t i = 0; i < slow.size(); ++i) {
            scale = std::max(scale, std::abs(slow[i]));
            err = std::max(err, std::abs(fast[i] - slow[i]));
        }
        ASSERT_LE(err, 1e-12 * std::max(scale, 1e-300)) << "instance " << inst;
    }
}

TEST(CausalConv, OddSizedInstance) {
    Rng rng(5);
    const auto x = random_tensor({1, 3, 40}, rng);
    const auto k = random_tensor({31, 2, 3}, rng);
    const auto fast = causal_conv(x, k);
    const auto slow = oracle::causal_conv(x, k);
    for (std::size_t i = 0; i < slow.size(); ++i) EXPECT_NEAR(fast[i], slow[i], 1e-12 * std::max(1.0, std::abs(slow[i])));
}

TEST(CausalConv, FutureInputsDoNotLeak) {
    Rng rng(6);
    for (int inst = 0; inst < 50; ++inst) {
        const std::size_t L = 2 + rng.below(50);
        const auto x = random_tensor({2, 3, L}, rng);
        const auto k = random_tensor({31, 4, 3}, rng);
        const std::size_t t0 = rng.below(L);
        auto mutated = x;
        for (std::size_t b = 0; b < 2; ++b)
            for (std::size_t c = 0; c < 3; ++c) mutated.at(b, c, t0) += 10.0;
        const auto y0 = causal_conv(x, k), y1 = causal_conv(mutated, k);
        for (std::size_t b = 0; b < 2; ++b)
            for (std::size_t o = 0; o < 4; ++o)
                for (std::size_t t = 0; t < t0; ++t) ASSERT_EQ(y0.at(b, o, t), y1.at(b, o, t));
    }
}

TEST(CausalConv, ShapeMismatch) {
    EXPECT_THROW(causal_conv(Tensor<double>({1, 3, 5}), Tensor<double>({4, 2, 2})), ShapeError);
}

TEST(CausalConv, BackwardMatchesCentralDifferences) {
    Rng rng(7);
    auto x = random_tensor({2, 2, 9}, rng);
    auto k = random_tensor({4, 3, 2}, rng);
    const auto r = random_tensor({2, 3, 9}, rng);
    auto loss = [&] {
        const auto y = causal_conv(x, k);
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * r[i];
        return s;
    };
    const auto g = causal_conv_backward(x, k, r);
    std::vector<double*> coords;
    std::vector<double> analytic;
    for (std::size_t i = 0; i < x.size(); ++i) coords.push_back(&x[i]), analytic.push_back(g.dx[i]);
    for (std::size_t i = 0; i < k.size(); ++i) coords.push_back(&k[i]), analytic.push_back(g.dkernel[i]);
    const auto num = oracle::numeric_gradient(coords, loss);
    for (std::size_t i = 0; i < num.size(); ++i) EXPECT_LT(oracle::relative_error(analytic[i], num[i]), 1e-8);
}

TEST(CkBlock, ZeroWeightsPassInputThrough) {
    CkBlockConfig cfg;
    cfg.n_in = cfg.n_out = 4;
    CkBlock<double> blk("b", cfg);
    Rng rng(8);
    const auto x = random_tensor({3, 4, 12}, rng);
    EXPECT_EQ(blk.forward(x, nn::Mode::Train, rng).output, x);
    EXPECT_EQ(blk.forward(x, nn::Mode::Eval, rng).output, x);
}

TEST(CkBlock, ParameterCounts) {
    CkBlockConfig first;
    first.n_in = 1;
    CkBlock<double> b1("b", first);
    ASSERT_TRUE(b1.residual.has_value());
    EXPECT_EQ(count(b1), 2u + 848u + 1056u + 64u);
    CkBlock<double> b2("b", CkBlockConfig{});
    EXPECT_FALSE(b2.residual.has_value());
    EXPECT_EQ(count(b2), 64u + 17712u + 1056u);
    EXPECT_EQ(count(b2), 18832u);
}

TEST(CkBlock, GradientCheck32To32) {
    CkBlockConfig cfg;
    cfg.dropout = 0.0;
    CkBlock<double> blk("b", cfg);
    Rng rng(9);
    blk.init(rng);
    for (auto& v : blk.bn.running_mean) v = 0.1 * rng.normal();
    for (auto& v : blk.bn.running_var) v = rng.uniform(0.5, 1.5);
    auto x = random_tensor({2, 32, 64}, rng);
    const auto r = random_tensor({2, 32, 64}, rng);
    nn::ParameterRefs<double> params;
    blk.collect(params);
    for (auto mode : {nn::Mode::Eval, nn::Mode::Train}) {
        auto loss = [&] {
            Rng unused(0);
            auto copy = blk;
            const auto y = copy.forward(x, mode, unused).output;
            double s = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * r[i];
            return s;
        };
        auto grads = [&] {
            nn::zero_grads(params);
            Rng unused(0);
            auto bn_state = blk.bn;
            auto f = blk.forward(x, mode, unused);
            blk.backward(f.trace, r);
            blk.bn.running_mean = bn_state.running_mean;
            blk.bn.running_var = bn_state.running_var;
        };
        nn::GradCheckOptions opt;
        opt.max_coords_per_target = 12;
        opt.seed = 1;
        const auto rep = nn::finite_difference_check(nn::grad_targets(params), loss, grads, opt);
        EXPECT_TRUE(rep.passed()) << rep;
    }
}

TEST(WhistleNet, ParameterCountMatchesArithmetic) {
    WhistleNet<double> net;
    const auto bd = parameter_breakdown(net);
    ASSERT_EQ(bd.blocks.size(), 4u);
    EXPECT_EQ(bd.blocks[0], 1970u);
    for (std::size_t i = 1; i < 4; ++i) EXPECT_EQ(bd.blocks[i], 18832u);
    EXPECT_EQ(bd.head, 32u * 16 + 16 + 16u * 2 + 2);
    EXPECT_EQ(bd.total, 59028u);
    EXPECT_GE(bd.total, 58500u);
    EXPECT_LE(bd.total, 59700u);
}

TEST(WhistleNet, ZeroInputGivesEvenLogits) {
    Rng rng(10);
    WhistleNet<double> net;
    net.init(rng);
    const auto logits = net.logits(Tensor<double>({1, 513}));
    EXPECT_EQ(logits[0], 0.0);
    EXPECT_EQ(logits[1], 0.0);
}

TEST(WhistleNet, WrongBinCountIsShapeError) {
    WhistleNet<double> net;
    EXPECT_THROW(net.logits(Tensor<double>({1, 512})), ShapeError);
}

TEST(WhistleNet, FiniteOverRandomDraws) {
    Rng rng(11);
    for (int draw = 0; draw < 100; ++draw) {
        WhistleNet<double> net;
        net.init(rng);
        const auto x = random_tensor({2, 513}, rng);
        ASSERT_TRUE(net.forward(x, nn::Mode::Train, rng).output.all_finite()) << "draw " << draw;
        ASSERT_TRUE(net.logits(x).all_finite()) << "draw " << draw;
    }
}

TEST(WhistleNet, FloatPathAgreesWithDouble) {
    Rng rng(12);
    WhistleNet<double> net;
    net.init(rng);
    auto fnet = net.cast<float>();
    const auto x = random_tensor({4, 513}, rng);
    const auto yd = net.logits(x);
    const auto yf = fnet.logits(x.cast<float>());
    for (std::size_t i = 0; i < yd.size(); ++i)
        EXPECT_LE(std::abs(yd[i] - yf[i]), 1e-3 * std::max(1.0, std::abs(yd[i])));
}

TEST(WhistleNet, EvalGradientCheck) {
    Rng rng(13);
    WhistleNet<double> net;
    net.init(rng);
    for (auto& blk : net.blocks) {
        for (auto& v : blk.bn.running_mean) v = 0.1 * rng.normal();
        for (auto& v : blk.bn.running_var) v = rng.uniform(0.5, 1.5);
    }
    const auto x = random_tensor({2, 513}, rng);
    const std::vector<int> labels{0, 1};
    const std::array<double, 2> w{1.0, 1.0};
    auto params = net.parameters();
    auto loss = [&] { return nn::weighted_cross_entropy(net.logits(x), labels, w).loss; };
    auto grads = [&] {
        nn::zero_grads(params);
        Rng unused(0);
        auto f = net.forward(x, nn::Mode::Eval, unused);
        net.backward(f.trace, nn::weighted_cross_entropy(f.output, labels, w).grad);
    };
    nn::GradCheckOptions opt;
    opt.max_coords_per_target = 4;
    opt.seed = 2;
    const auto rep = nn::finite_difference_check(nn::grad_targets(params), loss, grads, opt);
    EXPECT_TRUE(rep.passed()) << rep;
}

TEST(WhistleNet, ForwardIsDeterministic) {
    Rng init(14);
    WhistleNet<double> net;
    net.init(init);
    const auto x = random_tensor({3, 513}, init);
    Rng a(5), b(5);
    EXPECT_EQ(net.forward(x, nn::Mode::Train, a).output, net.forward(x, nn::Mode::Train, b).output);
}
