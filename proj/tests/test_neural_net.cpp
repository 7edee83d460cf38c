#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "uavtraj/neural_net.hpp"

using namespace uavtraj;

namespace {

// 2 -> 2 -> 2 network with hand-picked weights.
MlpQNetwork tiny()
{
    auto net = MlpQNetwork::zeros({2, 2, 2});
    auto& l = net.layers();
    l[0].weights << 1.0, -1.0, 0.5, 2.0;
    l[0].bias << 0.0, -1.0;
    l[1].weights << 1.0, 2.0, -1.0, 0.5;
    l[1].bias << 0.1, 0.2;
    return net;
}

std::vector<QSample> batch_for(const MlpQNetwork& net, int n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<QSample> b;
    for (int i = 0; i < n; ++i) {
        QSample s;
        for (int k = 0; k < net.input_size(); ++k)
            s.features.push_back(u(rng));
        s.action = static_cast<int>(rng() % static_cast<std::uint64_t>(net.output_size()));
        s.target = 2.0 * u(rng) - 1.0;
        b.push_back(s);
    }
    return b;
}

}  // namespace

TEST(Mlp, ShapesAndInitBounds)
{
    MlpQNetwork net({10, 100, 100, 729}, 7);
    EXPECT_EQ(net.sizes(), (std::vector<int>{10, 100, 100, 729}));
    EXPECT_EQ(net.parameter_count(), 10U * 100 + 100 + 100 * 100 + 100 + 100 * 729 + 729);
    for (const auto& layer : net.layers()) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weights.cols()));
        EXPECT_LE(layer.weights.cwiseAbs().maxCoeff(), bound);
        EXPECT_LE(layer.bias.cwiseAbs().maxCoeff(), bound);
    }
    EXPECT_TRUE(net == MlpQNetwork({10, 100, 100, 729}, 7));
    EXPECT_FALSE(net == MlpQNetwork({10, 100, 100, 729}, 8));
    EXPECT_THROW(MlpQNetwork({3}, 1), std::invalid_argument);
    EXPECT_THROW(MlpQNetwork({3, 0, 2}, 1), std::invalid_argument);
}

TEST(Mlp, ForwardMatchesHandComputation)
{
    const auto net = tiny();
    // x = (1, 0.5): hidden pre = (0.5, 0.5 + 1 - 1) = (0.5, 0.5), relu same.
    // out = (0.5 + 1 + 0.1, -0.5 + 0.25 + 0.2) = (1.6, -0.05).
    const std::vector<double> x{1.0, 0.5};
    const auto q = net.forward(x);
    EXPECT_NEAR(q[0], 1.6, 1e-15);
    EXPECT_NEAR(q[1], -0.05, 1e-15);
    // x = (0, 0.2): hidden pre = (-0.2, -0.6) -> relu zero, out = bias.
    const std::vector<double> y{0.0, 0.2};
    const auto r = net.forward(y);
    EXPECT_DOUBLE_EQ(r[0], 0.1);
    EXPECT_DOUBLE_EQ(r[1], 0.2);
    EXPECT_THROW(net.forward(std::vector<double>{1.0}), std::invalid_argument);
}

TEST(Mlp, BatchForwardAgreesWithSingle)
{
    MlpQNetwork net({4, 8, 8, 5}, 3);
    Eigen::MatrixXd in = Eigen::MatrixXd::Random(4, 6);
    const auto out = net.forward_batch(in);
    for (int c = 0; c < 6; ++c) {
        std::vector<double> x(in.col(c).data(), in.col(c).data() + 4);
        EXPECT_LT((out.col(c) - net.forward(x)).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Mlp, LossIsMeanSquaredHeadError)
{
    const auto net = tiny();
    std::vector<QSample> b{{{1.0, 0.5}, 0, 2.0}, {{1.0, 0.5}, 1, 0.95}};
    // ((2 - 1.6)^2 + (0.95 + 0.05)^2) / 2 = (0.16 + 1) / 2
    EXPECT_NEAR(net.loss(b), 0.58, 1e-14);
    std::vector<QSample> bad{{{1.0, 0.5}, 2, 0.0}};
    EXPECT_THROW(net.loss(bad), std::out_of_range);
    EXPECT_THROW(net.loss(std::span<const QSample>{}), std::invalid_argument);
}

TEST(Mlp, GradientsMatchFiniteDifferences)
{
    MlpQNetwork net({5, 7, 6, 4}, 11);
    // Shift biases so no ReLU sits exactly at its kink for this batch.
    for (auto& l : net.layers())
        l.bias.array() += 0.05;
    const auto batch = batch_for(net, 6, 2);
    const auto g = net.gradients(batch);
    EXPECT_NEAR(g.loss, net.loss(batch), 1e-14);
    const double h = 1e-6;
    double worst = 0.0;
    for (std::size_t i = 0; i < net.parameter_count(); ++i) {
        MlpQNetwork plus = net, minus = net;
        plus.set_parameter(i, net.parameter(i) + h);
        minus.set_parameter(i, net.parameter(i) - h);
        const double fd = (plus.loss(batch) - minus.loss(batch)) / (2 * h);
        // Analytic entry i: inner product of the gradient with a one-hot parameter vector.
        MlpQNetwork probe = MlpQNetwork::zeros(net.sizes());
        probe.set_parameter(i, 1.0);
        double a = 0.0;
        for (std::size_t k = 0; k < probe.layers().size(); ++k) {
            a += (probe.layers()[k].weights.array() * g.layers[k].weights.array()).sum();
            a += (probe.layers()[k].bias.array() * g.layers[k].bias.array()).sum();
        }
        worst = std::max(worst, std::abs(fd - a) / std::max(1.0, std::abs(fd)));
    }
    EXPECT_LT(worst, 1e-6);
}

TEST(Mlp, GradientTouchesOnlyTakenHeads)
{
    MlpQNetwork net({3, 4, 5}, 1);
    std::vector<QSample> b{{{0.1, 0.2, 0.3}, 2, 1.0}};
    const auto g = net.gradients(b);
    const auto& out = g.layers.back();
    for (int r = 0; r < 5; ++r)
        if (r != 2) {
            EXPECT_EQ(out.weights.row(r).cwiseAbs().sum(), 0.0);
            EXPECT_EQ(out.bias(r), 0.0);
        }
}

TEST(Mlp, SgdStepDescends)
{
    MlpQNetwork net({4, 16, 16, 3}, 5);
    const auto batch = batch_for(net, 16, 9);
    const double before = net.loss(batch);
    const double reported = net.sgd_step(batch, 1e-2);
    EXPECT_DOUBLE_EQ(reported, before);
    EXPECT_LT(net.loss(batch), before);
    for (int i = 0; i < 2000; ++i)
        net.sgd_step(batch, 5e-2);
    EXPECT_LT(net.loss(batch), 0.1 * before);
}

TEST(Mlp, SgdStepMatchesManualUpdate)
{
    MlpQNetwork net({3, 4, 2}, 4);
    std::vector<QSample> b{{{0.3, 0.6, 0.9}, 1, -0.5}};
    const auto g = net.gradients(b);
    MlpQNetwork manual = net;
    for (std::size_t k = 0; k < manual.layers().size(); ++k) {
        manual.layers()[k].weights -= 0.1 * g.layers[k].weights;
        manual.layers()[k].bias -= 0.1 * g.layers[k].bias;
    }
    net.sgd_step(b, 0.1);
    for (std::size_t i = 0; i < net.parameter_count(); ++i)
        EXPECT_NEAR(net.parameter(i), manual.parameter(i), 1e-15);
}

TEST(Mlp, DivergenceIsReported)
{
    MlpQNetwork net({2, 3, 2}, 1);
    std::vector<QSample> nan_target{{{0.5, 0.5}, 0, std::nan("")}};
    EXPECT_THROW(net.sgd_step(nan_target, 1e-3), DivergenceError);
    MlpQNetwork big({2, 3, 2}, 1);
    std::vector<QSample> huge{{{0.5, 0.5}, 0, 1e200}};
    EXPECT_THROW(
        {
            for (int i = 0; i < 10; ++i)
                big.sgd_step(huge, 1e10);
        },
        DivergenceError);
}

TEST(Mlp, SaveLoadRoundTripIsExact)
{
    MlpQNetwork net({6, 9, 9, 27}, 21);
    std::stringstream ss;
    net.save(ss);
    const auto back = MlpQNetwork::load(ss);
    EXPECT_TRUE(back == net);
    std::stringstream junk("nonsense 1 2 3");
    EXPECT_THROW(MlpQNetwork::load(junk), std::runtime_error);
    std::stringstream cut;
    net.save(cut);
    const std::string text = cut.str();
    std::stringstream trunc(text.substr(0, text.size() / 2));
    EXPECT_THROW(MlpQNetwork::load(trunc), std::runtime_error);
}

TEST(Target, SyncCopiesAndChecksShape)
{
    MlpQNetwork live({3, 4, 2}, 1), frozen({3, 4, 2}, 2);
    sync_target(live, frozen);
    EXPECT_TRUE(live == frozen);
    std::vector<QSample> b{{{0.1, 0.1, 0.1}, 0, 5.0}};
    live.sgd_step(b, 0.1);
    EXPECT_FALSE(live == frozen);
    MlpQNetwork other({3, 5, 2}, 1);
    EXPECT_THROW(sync_target(live, other), std::invalid_argument);
}

TEST(Target, TdTargetCases)
{
    const auto net = tiny();
    const std::vector<double> x{1.0, 0.5};  // Q = (1.6, -0.05)
    EXPECT_DOUBLE_EQ(td_target(0.3, x, true, net, 0.7), 0.3);
    EXPECT_NEAR(td_target(0.3, x, false, net, 0.7), 0.3 + 0.7 * 1.6, 1e-15);
    const std::vector<std::uint8_t> only1{0, 1};
    EXPECT_NEAR(td_target(0.3, x, false, net, 0.7, only1), 0.3 - 0.7 * 0.05, 1e-15);
    const std::vector<std::uint8_t> none{0, 0};
    EXPECT_THROW(td_target(0.3, x, false, net, 0.7, none), std::invalid_argument);
    EXPECT_THROW(td_target(0.3, x, false, net, 1.5), std::invalid_argument);
}
