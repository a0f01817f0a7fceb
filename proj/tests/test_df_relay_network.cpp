#include "csklab/df_relay_network.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "csklab/analytic_ber.hpp"
#include "support/oracles.hpp"

using namespace csk;
using cplx = std::complex<double>;

namespace {

NetworkConfig unit_config(int n_relays, int beta, double n0) {
    NetworkConfig cfg;
    cfg.n_relays = n_relays;
    cfg.p_j.assign(n_relays, 1.0);
    cfg.beta = beta;
    cfg.n0 = n0;
    return cfg;
}

}  // namespace

TEST(MrcCombine, SingleLinkIdentity) {
    const std::vector<double> u{0.7, -0.3, 0.1};
    std::vector<cplx> y(u.begin(), u.end());
    const auto out = mrc_combine(y, {}, {1.0, 0.0}, {}, 1.0, {}, 1.0);
    for (std::size_t k = 0; k < u.size(); ++k) EXPECT_NEAR(out[k], u[k], 1e-15);
}

TEST(MrcCombine, CoherentSumOfTwoLinks) {
    const std::vector<double> u{0.7, -0.3, 0.1};
    std::vector<cplx> y(u.begin(), u.end());
    std::vector<std::vector<cplx>> y_rd{{y}};
    const std::vector<cplx> h_rd{{1.0, 0.0}};
    const std::vector<double> p_j{1.0};
    const auto out = mrc_combine(y, y_rd, {1.0, 0.0}, h_rd, 1.0, p_j, 1.0);
    for (std::size_t k = 0; k < u.size(); ++k) EXPECT_NEAR(out[k], 2.0 * u[k], 1e-15);
}

TEST(MrcCombine, ConjugateWeightCancelsPhase) {
    // h purely imaginary: a y = h^* h u = |h|^2 u must be real.
    const std::vector<double> u{0.7, -0.3, 0.1};
    const cplx h{0.0, 1.0};
    std::vector<cplx> y(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) y[k] = h * u[k];
    const auto out = mrc_combine(y, {}, h, {}, 1.0, {}, 1.0);
    for (std::size_t k = 0; k < u.size(); ++k) EXPECT_NEAR(out[k], u[k], 1e-15);
}

TEST(MrcCombine, CountMismatch) {
    const std::vector<cplx> y{cplx{1.0, 0.0}};
    const std::vector<std::vector<cplx>> y_rd(1, std::vector<cplx>{cplx{0.5, 0.0}});
    const std::vector<cplx> h_rd;  // wrong: 1 relay signal, 0 coefficients
    const std::vector<double> p_j{1.0};
    EXPECT_THROW(mrc_combine(y, y_rd, {1.0, 0.0}, h_rd, 1.0, p_j, 1.0), std::invalid_argument);
}

TEST(AlphaValue, KnownValues) {
    EXPECT_DOUBLE_EQ(alpha_value({1.0, 0.0}, {}, 1.0, {}, 10.0), 10.0);
    const std::vector<cplx> h1{{1.0, 0.0}};
    const std::vector<double> p1{1.0};
    EXPECT_DOUBLE_EQ(alpha_value({0.0, 0.0}, h1, 1.0, p1, 3.0), 3.0);
    const std::vector<cplx> h2{{2.0, 0.0}};
    EXPECT_DOUBLE_EQ(alpha_value({1.0, 1.0}, h2, 1.0, p1, 2.0), 12.0);
    EXPECT_THROW(alpha_value({1.0, 0.0}, h2, 1.0, {}, 1.0), std::invalid_argument);
}

TEST(DecisionMoments, KnownValues) {
    EXPECT_DOUBLE_EQ(decision_mean(0.0, 1), 0.0);
    EXPECT_DOUBLE_EQ(decision_mean(2.5, -1), -2.5);
    EXPECT_DOUBLE_EQ(decision_variance(0.0, 1.0), 0.0);
    EXPECT_DOUBLE_EQ(decision_variance(4.0, 2.0), 4.0);
    EXPECT_THROW(decision_variance(1.0, 0.0), std::invalid_argument);
    EXPECT_THROW(decision_mean(-1.0, 1), std::invalid_argument);
}

TEST(TransmitSymbol, ConditionalMomentsMatchAnalyticLaws) {
    // Fixed links and chips; only the noise is redrawn.
    const auto cfg = unit_config(1, 10, 0.0);  // n0 set per-draw below
    auto net = cfg;
    net.n0 = 0.4;
    const auto chips = generate_sequence(net.map, 0.3, 10);
    Rng link_rng(77);
    const SymbolLinks links = draw_symbol_links(net, link_rng);

    const std::size_t n_draws = 100'000;
    Rng noise_rng(78);
    FrameWorkspace ws;
    double sum = 0.0, sum2 = 0.0;
    DecisionRecord last;
    for (std::size_t i = 0; i < n_draws; ++i) {
        last = transmit_symbol(net, 1, chips.chips, links, noise_rng, ws);
        sum += last.correlator_value;
        sum2 += last.correlator_value * last.correlator_value;
    }
    const double n = static_cast<double>(n_draws);
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    EXPECT_GT(last.alpha, 0.0);
    EXPECT_NEAR(mean, decision_mean(last.alpha, 1), 0.01 * last.alpha);
    EXPECT_NEAR(var, decision_variance(last.alpha, net.n0),
                0.02 * decision_variance(last.alpha, net.n0));
}

TEST(TransmitSymbol, ConditionalErrorRateFollowsQLaw) {
    auto net = unit_config(0, 10, 0.0);
    const auto chips = generate_sequence(net.map, 0.3, 10);
    Rng link_rng(81);
    const SymbolLinks links = draw_symbol_links(net, link_rng);
    const double alpha = alpha_value(links.h_sd, {}, 1.0, {}, bit_energy(chips, 0, 10));
    net.n0 = alpha / 2.0;  // alpha / N0 = 2

    const std::size_t n_draws = 100'000;
    Rng noise_rng(82);
    FrameWorkspace ws;
    std::size_t errors = 0;
    for (std::size_t i = 0; i < n_draws; ++i) {
        const auto rec = transmit_symbol(net, 1, chips.chips, links, noise_rng, ws);
        if (rec.decided != 1) ++errors;
    }
    const double p = conditional_ber(alpha, net.n0);
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n_draws));
    EXPECT_NEAR(static_cast<double>(errors) / static_cast<double>(n_draws), p, 3.0 * se);
}

TEST(TransmitFrame, NoiselessHasNoErrors) {
    auto net = unit_config(1, 5, 0.0);
    const std::size_t n_symbols = 10'000;
    Rng rng(90);
    const auto chips = generate_sequence(net.map, 0.3, n_symbols * 5);
    SymbolFrame frame;
    frame.beta = 5;
    for (std::size_t i = 0; i < n_symbols; ++i) frame.symbols.push_back(rng.uniform() < 0.5 ? -1 : 1);
    const auto records = transmit_frame(net, frame, chips, rng);
    for (std::size_t l = 0; l < n_symbols; ++l) EXPECT_EQ(records[l].decided, frame.symbols[l]);
}

TEST(TransmitFrame, SnrScaleInvariance) {
    // Scaling all powers and N0 by the same constant leaves decisions
    // unchanged for matched seeds.
    const std::size_t n_symbols = 2000;
    SymbolFrame frame;
    frame.beta = 8;
    Rng bit_rng(91);
    for (std::size_t i = 0; i < n_symbols; ++i) frame.symbols.push_back(bit_rng.uniform() < 0.5 ? -1 : 1);

    auto run = [&](double scale) {
        auto net = unit_config(1, 8, 1.0 * scale);
        net.p_s = scale;
        net.p_j.assign(1, scale);
        Rng rng(92);
        const auto chips = generate_sequence(net.map, 0.3, n_symbols * 8);
        std::vector<int> out;
        for (const auto& r : transmit_frame(net, frame, chips, rng)) out.push_back(r.decided);
        return out;
    };
    EXPECT_EQ(run(1.0), run(7.5));
}

TEST(Alpha, MonotoneInAddedRelay) {
    Rng rng(93);
    for (int i = 0; i < 1000; ++i) {
        const cplx h_sd = rng.complex_normal(1.0);
        const cplx h_r = rng.complex_normal(1.0);
        const double e_b = 5.0 + 10.0 * rng.uniform();
        const double a0 = alpha_value(h_sd, {}, 1.0, {}, e_b);
        const std::vector<cplx> h1{h_r};
        const std::vector<double> p1{0.7};
        const double a1 = alpha_value(h_sd, h1, 1.0, p1, e_b);
        EXPECT_GE(a1, a0);
        EXPECT_LE(conditional_ber(a1, 1.0), conditional_ber(a0, 1.0));
    }
}

TEST(TransmitFrame, SingleLinkFixedChannelMatchesEnergyAveragedOracle) {
    // N = 0, h_sd = 1: the system reduces to single-link CSK over AWGN and the
    // BER equals the conditional Q law averaged over the bit-energy draw.
    auto net = unit_config(0, 10, 0.0);
    const double gamma_bar = std::pow(10.0, 6.79 / 10.0);  // ~4.775 per bit
    net.n0 = 10.0 / gamma_bar;

    const std::size_t n_symbols = 100'000;
    Rng rng(94);
    const auto chips = generate_sequence(net.map, 0.3, n_symbols * 10);
    const SymbolLinks unit_links{{1.0, 0.0}, {}, {}};
    FrameWorkspace ws;
    std::size_t errors = 0;
    double expected = 0.0, var_acc = 0.0;
    for (std::size_t l = 0; l < n_symbols; ++l) {
        const std::span<const double> block(chips.chips.data() + l * 10, 10);
        const auto rec = transmit_symbol(net, 1, block, unit_links, rng, ws, l);
        if (rec.decided != 1) ++errors;
        const double p = conditional_ber(rec.alpha, net.n0);
        expected += p;
        var_acc += p * (1.0 - p);
    }
    const double n = static_cast<double>(n_symbols);
    const double ber = static_cast<double>(errors) / n;
    const double se = std::sqrt(var_acc) / n;
    EXPECT_NEAR(ber, expected / n, 3.0 * se);
}
