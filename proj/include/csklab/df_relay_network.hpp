#ifndef CSKLAB_DF_RELAY_NETWORK_HPP
#define CSKLAB_DF_RELAY_NETWORK_HPP

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "csklab/chaos_maps.hpp"
#include "csklab/csk_modem.hpp"
#include "csklab/fading_channel.hpp"
#include "csklab/rng.hpp"

namespace csk {

/// Static description of the two-phase DF network.
struct NetworkConfig {
    int n_relays = 0;
    double p_s = 1.0;
    std::vector<double> p_j;  // per-relay transmit power, length n_relays
    double var_sd = 1.0;      // E[|h_sd|^2]
    double var_sr = 1.0;      // E[|h_s,rn|^2]
    double var_rd = 1.0;      // E[|h_rn,d|^2]
    int beta = 10;
    MapKind map;
    double n0 = 1.0;

    void validate() const {
        if (n_relays < 0) throw std::invalid_argument("NetworkConfig: n_relays must be >= 0");
        if (p_j.size() != static_cast<std::size_t>(n_relays))
            throw std::invalid_argument("NetworkConfig: p_j length must equal n_relays");
        if (!(p_s > 0.0)) throw std::invalid_argument("NetworkConfig: p_s must be > 0");
        for (double p : p_j)
            if (!(p > 0.0)) throw std::invalid_argument("NetworkConfig: relay powers must be > 0");
        if (!(var_sd > 0.0 && var_sr > 0.0 && var_rd > 0.0))
            throw std::invalid_argument("NetworkConfig: link variances must be > 0");
        if (beta < 1) throw std::invalid_argument("NetworkConfig: beta must be >= 1");
        if (!(n0 >= 0.0)) throw std::invalid_argument("NetworkConfig: n0 must be >= 0");
        map.validate();
    }
};

/// Per-symbol correlator outcome with the analytic moments it should obey.
struct DecisionRecord {
    std::size_t symbol_index = 0;
    double correlator_value = 0.0;
    int decided = 1;
    double alpha = 0.0;
    double analytic_mean = 0.0;
    double analytic_variance = 0.0;
    double e_b = 0.0;
};

/// alpha = [P_s |h_sd|^2 + sum_j P_j |h_rj,d|^2] * E_b.
inline double alpha_value(std::complex<double> h_sd, std::span<const std::complex<double>> h_rd,
                          double p_s, std::span<const double> p_j, double e_b) {
    if (h_rd.size() != p_j.size()) throw std::invalid_argument("alpha_value: length mismatch");
    if (!(e_b >= 0.0)) throw std::invalid_argument("alpha_value: e_b must be >= 0");
    double gain = p_s * std::norm(h_sd);
    for (std::size_t j = 0; j < h_rd.size(); ++j) gain += p_j[j] * std::norm(h_rd[j]);
    return gain * e_b;
}

/// Conditional mean of the decision variable: alpha * s.
inline double decision_mean(double alpha, int s) {
    if (!(alpha >= 0.0)) throw std::invalid_argument("decision_mean: alpha must be >= 0");
    if (s != 1 && s != -1) throw std::invalid_argument("decision_mean: s must be +/-1");
    return alpha * static_cast<double>(s);
}

/// Conditional variance of the decision variable: (N0/2) * alpha.
inline double decision_variance(double alpha, double n0) {
    if (!(alpha >= 0.0)) throw std::invalid_argument("decision_variance: alpha must be >= 0");
    if (!(n0 > 0.0)) throw std::invalid_argument("decision_variance: n0 must be > 0");
    return (n0 / 2.0) * alpha;
}

/// MRC combining with weights a = sqrt(P_s) h_sd^* / sigma and
/// a_j = sqrt(P_j) h_rj,d^* / sigma; the real part is taken per sample.
inline void mrc_combine(std::span<const std::complex<double>> y_sd,
                        std::span<const std::vector<std::complex<double>>> y_rd,
                        std::complex<double> h_sd, std::span<const std::complex<double>> h_rd,
                        double p_s, std::span<const double> p_j, double sigma,
                        std::span<double> out) {
    if (!(sigma > 0.0)) throw std::invalid_argument("mrc_combine: sigma must be > 0");
    const std::size_t n_relays = y_rd.size();
    if (h_rd.size() != n_relays || p_j.size() != n_relays)
        throw std::invalid_argument("mrc_combine: relay count mismatch");
    for (const auto& y : y_rd)
        if (y.size() != y_sd.size()) throw std::invalid_argument("mrc_combine: sample length mismatch");
    if (out.size() != y_sd.size()) throw std::invalid_argument("mrc_combine: output length mismatch");

    const std::complex<double> a = std::sqrt(p_s) * std::conj(h_sd) / sigma;
    std::vector<std::complex<double>> aj(n_relays);
    for (std::size_t j = 0; j < n_relays; ++j) aj[j] = std::sqrt(p_j[j]) * std::conj(h_rd[j]) / sigma;

    for (std::size_t k = 0; k < y_sd.size(); ++k) {
        std::complex<double> acc = a * y_sd[k];
        for (std::size_t j = 0; j < n_relays; ++j) acc += aj[j] * y_rd[j][k];
        out[k] = acc.real();
    }
}

inline std::vector<double> mrc_combine(std::span<const std::complex<double>> y_sd,
                                       std::span<const std::vector<std::complex<double>>> y_rd,
                                       std::complex<double> h_sd,
                                       std::span<const std::complex<double>> h_rd, double p_s,
                                       std::span<const double> p_j, double sigma) {
    std::vector<double> out(y_sd.size());
    mrc_combine(y_sd, y_rd, h_sd, h_rd, p_s, p_j, sigma, out);
    return out;
}

/// One symbol period worth of channel coefficients.
struct SymbolLinks {
    std::complex<double> h_sd;
    std::vector<std::complex<double>> h_sr;  // source -> relay n (discarded by the ideal relay)
    std::vector<std::complex<double>> h_rd;  // relay n -> destination
};

inline SymbolLinks draw_symbol_links(const NetworkConfig& cfg, Rng& rng) {
    SymbolLinks links;
    links.h_sd = draw_channel(LinkRole::SourceDest, -1, cfg.var_sd, rng).h;
    links.h_sr.resize(cfg.n_relays);
    links.h_rd.resize(cfg.n_relays);
    for (int n = 0; n < cfg.n_relays; ++n)
        links.h_sr[n] = draw_channel(LinkRole::SourceRelay, n, cfg.var_sr, rng).h;
    for (int n = 0; n < cfg.n_relays; ++n)
        links.h_rd[n] = draw_channel(LinkRole::RelayDest, n, cfg.var_rd, rng).h;
    return links;
}

/// Scratch buffers so the per-symbol hot path does not allocate.
struct FrameWorkspace {
    std::vector<double> u;
    std::vector<std::complex<double>> y_sd;
    std::vector<std::complex<double>> y_sr;
    std::vector<std::vector<std::complex<double>>> y_rd;
    std::vector<double> combined;

    void resize(int beta, int n_relays) {
        u.resize(beta);
        y_sd.resize(beta);
        y_sr.resize(beta);
        y_rd.resize(n_relays);
        for (auto& y : y_rd) y.resize(beta);
        combined.resize(beta);
    }
};

/// One symbol through both phases at fixed channel coefficients.
/// The recorded correlator value is scaled to the convention in which its
/// conditional mean is alpha*s and its conditional variance (N0/2)*alpha.
inline DecisionRecord transmit_symbol(const NetworkConfig& cfg, int s,
                                      std::span<const double> chip_block,
                                      const SymbolLinks& links, Rng& rng, FrameWorkspace& ws,
                                      std::size_t symbol_index = 0) {
    const NoiseModel noise(cfg.n0);
    const double sigma = noise.enabled() ? std::sqrt(noise.sigma2()) : 1.0;
    ws.resize(cfg.beta, cfg.n_relays);

    double e_b = 0.0;
    for (int k = 0; k < cfg.beta; ++k) {
        ws.u[k] = static_cast<double>(s) * chip_block[k];
        e_b += chip_block[k] * chip_block[k];
    }

    // Phase 1: source broadcast to destination and relays. The relay inputs
    // are discarded under the error-free DF assumption.
    apply_link(ws.u, links.h_sd, cfg.p_s, noise, rng, ws.y_sd);
    for (int n = 0; n < cfg.n_relays; ++n)
        apply_link(ws.u, links.h_sr[n], cfg.p_s, noise, rng, ws.y_sr);

    // Phase 2: each relay regenerates the exact waveform u.
    for (int n = 0; n < cfg.n_relays; ++n)
        apply_link(ws.u, links.h_rd[n], cfg.p_j[n], noise, rng, ws.y_rd[n]);

    mrc_combine(ws.y_sd, ws.y_rd, links.h_sd, links.h_rd, cfg.p_s, cfg.p_j, sigma, ws.combined);

    double corr = 0.0;
    for (int k = 0; k < cfg.beta; ++k) corr += ws.combined[k] * chip_block[k];
    corr *= sigma;

    DecisionRecord rec;
    rec.symbol_index = symbol_index;
    rec.correlator_value = corr;
    rec.decided = (corr < 0.0) ? -1 : 1;
    rec.e_b = e_b;
    rec.alpha = alpha_value(links.h_sd, links.h_rd, cfg.p_s, cfg.p_j, e_b);
    rec.analytic_mean = rec.alpha * static_cast<double>(s);
    rec.analytic_variance = (cfg.n0 / 2.0) * rec.alpha;
    return rec;
}

/// Full two-phase DF transmission of a frame; channels are redrawn for every
/// symbol (i.i.d. block fading).
inline std::vector<DecisionRecord> transmit_frame(const NetworkConfig& cfg, const SymbolFrame& frame,
                                                  const ChaoticSequence& chips, Rng& rng) {
    cfg.validate();
    frame.validate();
    if (frame.beta != cfg.beta) throw std::invalid_argument("transmit_frame: beta mismatch");
    if (chips.chips.size() != frame.symbols.size() * static_cast<std::size_t>(cfg.beta))
        throw std::invalid_argument("transmit_frame: chip count != symbols * beta");

    std::vector<DecisionRecord> records;
    records.reserve(frame.symbols.size());
    FrameWorkspace ws;
    ws.resize(cfg.beta, cfg.n_relays);
    for (std::size_t l = 0; l < frame.symbols.size(); ++l) {
        const SymbolLinks links = draw_symbol_links(cfg, rng);
        const std::span<const double> block(chips.chips.data() + l * cfg.beta,
                                            static_cast<std::size_t>(cfg.beta));
        records.push_back(transmit_symbol(cfg, frame.symbols[l], block, links, rng, ws, l));
    }
    return records;
}

}  // namespace csk

#endif  // CSKLAB_DF_RELAY_NETWORK_HPP
