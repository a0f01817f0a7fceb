#ifndef CSKLAB_HARNESS_HPP
#define CSKLAB_HARNESS_HPP

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <functional>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <future>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "csklab/analytic_ber.hpp"
#include "csklab/df_relay_network.hpp"
#include "csklab/energy_stats.hpp"
#include "csklab/errors.hpp"

namespace csk {

enum class RunMode { Sweep, Fit, Compare };

struct ExperimentConfig {
    RunMode mode = RunMode::Sweep;
    NetworkConfig network;
    std::vector<double> eb_n0_grid_db;
    std::size_t n_bits = 1'000'000;
    std::uint64_t master_seed = 1;
    std::string output_path;
    std::size_t min_errors = 100;

    void validate() const {
        network.validate();
        if (mode != RunMode::Fit) {
            if (eb_n0_grid_db.empty()) throw ConfigError("sweep.grid: grid must be nonempty");
            for (std::size_t i = 1; i < eb_n0_grid_db.size(); ++i)
                if (!(eb_n0_grid_db[i] > eb_n0_grid_db[i - 1]))
                    throw ConfigError("sweep.grid: grid must be strictly increasing (duplicates rejected)");
        }
        if (n_bits < static_cast<std::size_t>(network.beta))
            throw ConfigError("sweep.n_bits: n_bits must be >= network.beta");
        if (min_errors == 0) throw ConfigError("sweep.min_errors: must be positive");
    }
};

/// "start:step:stop" (dB) -> inclusive grid.
inline std::vector<double> parse_grid(const std::string& text) {
    double start = 0.0, step = 0.0, stop = 0.0;
    char c1 = 0, c2 = 0;
    std::istringstream is(text);
    if (!(is >> start >> c1 >> step >> c2 >> stop) || c1 != ':' || c2 != ':')
        throw ConfigError("sweep.grid: expected start:step:stop, got '" + text + "'");
    if (!(step > 0.0)) throw ConfigError("sweep.grid: step must be > 0");
    std::vector<double> grid;
    for (double v = start; v <= stop + 1e-12; v += step) grid.push_back(v);
    if (grid.empty()) throw ConfigError("sweep.grid: empty grid");
    return grid;
}

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline double to_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError(key + ": not a number: '" + value + "'");
    }
}

inline long long to_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError(key + ": not an integer: '" + value + "'");
    }
}

inline std::uint64_t to_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError(key + ": not an unsigned integer: '" + value + "'");
    }
}

}  // namespace detail

/// Strict INI-style parser: sections [network], [sweep], [output]; unknown
/// keys are rejected with the offending field path. Defaults are filled in
/// for anything not specified.
inline ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    cfg.network.p_j.clear();
    std::optional<std::vector<double>> p_j_explicit;
    std::optional<std::vector<double>> grid_explicit;

    std::string section;
    std::istringstream is(text);
    std::string raw_line;
    int line_no = 0;
    while (std::getline(is, raw_line)) {
        ++line_no;
        std::string line = raw_line;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": malformed section");
            section = detail::trim(line.substr(1, line.size() - 2));
            if (section != "network" && section != "sweep" && section != "output")
                throw ConfigError("unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        const std::string path = section + "." + key;

        if (section == "network") {
            if (key == "map") {
                if (value == "cpf") cfg.network.map.tag = ChaosMap::Cpf;
                else if (value == "pwl") cfg.network.map.tag = ChaosMap::Pwl;
                else throw ConfigError("network.map: must be cpf or pwl, got '" + value + "'");
            } else if (key == "beta") {
                const long long b = detail::to_int(path, value);
                if (b < 1) throw ConfigError("network.beta: must be >= 1");
                cfg.network.beta = static_cast<int>(b);
            } else if (key == "relays") {
                const long long n = detail::to_int(path, value);
                if (n < 0) throw ConfigError("network.relays: must be >= 0");
                cfg.network.n_relays = static_cast<int>(n);
            } else if (key == "p_s") {
                cfg.network.p_s = detail::to_double(path, value);
            } else if (key == "p_j") {
                std::vector<double> pj;
                std::istringstream vs(value);
                std::string item;
                while (std::getline(vs, item, ',')) pj.push_back(detail::to_double(path, detail::trim(item)));
                p_j_explicit = pj;
            } else if (key == "var_sd") {
                cfg.network.var_sd = detail::to_double(path, value);
            } else if (key == "var_sr") {
                cfg.network.var_sr = detail::to_double(path, value);
            } else if (key == "var_rd") {
                cfg.network.var_rd = detail::to_double(path, value);
            } else if (key == "pwl_l") {
                cfg.network.map.pwl_L = static_cast<int>(detail::to_int(path, value));
            } else if (key == "pwl_phi") {
                cfg.network.map.pwl_phi = detail::to_double(path, value);
            } else {
                throw ConfigError("unknown key " + path);
            }
        } else if (section == "sweep") {
            if (key == "grid") {
                grid_explicit = parse_grid(value);
            } else if (key == "n_bits") {
                cfg.n_bits = static_cast<std::size_t>(detail::to_u64(path, value));
            } else if (key == "min_errors") {
                cfg.min_errors = static_cast<std::size_t>(detail::to_u64(path, value));
            } else if (key == "seed") {
                cfg.master_seed = detail::to_u64(path, value);
            } else {
                throw ConfigError("unknown key " + path);
            }
        } else if (section == "output") {
            if (key == "path") {
                cfg.output_path = value;
            } else {
                throw ConfigError("unknown key " + path);
            }
        } else {
            throw ConfigError("key outside a section: " + key);
        }
    }

    if (p_j_explicit) {
        if (p_j_explicit->size() == 1 && cfg.network.n_relays > 1)
            cfg.network.p_j.assign(cfg.network.n_relays, p_j_explicit->front());
        else
            cfg.network.p_j = *p_j_explicit;
    } else {
        cfg.network.p_j.assign(cfg.network.n_relays, 1.0);
    }
    if (grid_explicit) cfg.eb_n0_grid_db = *grid_explicit;
    else cfg.eb_n0_grid_db = {0.0, 5.0, 10.0, 15.0};
    if (cfg.network.p_j.size() != static_cast<std::size_t>(cfg.network.n_relays))
        throw ConfigError("network.p_j: length must equal network.relays");
    cfg.validate();
    return cfg;
}

/// Mean of alpha for the Eb/N0 convention: (P_s var_sd + sum P_j var_rd) * beta * T_c.
inline double expected_alpha(const NetworkConfig& cfg) {
    double gain = cfg.p_s * cfg.var_sd;
    for (double p : cfg.p_j) gain += p * cfg.var_rd;
    return gain * static_cast<double>(cfg.beta);
}

/// N0 realizing a target Eb/N0 (dB) under the gamma_bar = E[alpha]/N0 convention.
inline double n0_for_eb_n0_db(const NetworkConfig& cfg, double eb_n0_db) {
    return expected_alpha(cfg) / std::pow(10.0, eb_n0_db / 10.0);
}

/// 95% Wilson score half-width for k errors in n trials.
inline double wilson_half_width(std::size_t k, std::size_t n) {
    if (n == 0) return 0.5;
    const double z = 1.959963984540054;
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double denom = 1.0 + z * z / nn;
    return z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / denom;
}

struct CurvePoint {
    BerPoint point;
    std::size_t n_bits = 0;
    std::size_t n_errors = 0;
    double ci_half_width = 0.0;
    std::string note;  // set when an analytic route failed
    bool valid = true;
};

struct BerCurve {
    std::vector<CurvePoint> points;
    std::uint64_t config_fingerprint = 0;
    std::string map_name;
    int beta = 0;
    int n_relays = 0;
    std::uint64_t master_seed = 0;
    GeneralizedGammaParams fit;
};

inline const char* map_name(const MapKind& m) {
    return m.tag == ChaosMap::Cpf ? "cpf" : "pwl";
}

namespace detail {

struct BlockResult {
    std::size_t bits = 0;
    std::size_t errors = 0;
};

/// One independently seeded simulation block.
inline BlockResult run_sim_block(NetworkConfig net, double n0, std::size_t n_symbols,
                                 std::uint64_t seed) {
    net.n0 = n0;
    Rng rng(seed);
    const double map_seed = draw_map_seed(net.map, rng);
    const ChaoticSequence chips =
        generate_sequence(net.map, map_seed, n_symbols * static_cast<std::size_t>(net.beta));
    SymbolFrame frame;
    frame.beta = net.beta;
    frame.symbols.resize(n_symbols);
    for (auto& s : frame.symbols) s = (rng.uniform() < 0.5) ? -1 : 1;
    const auto records = transmit_frame(net, frame, chips, rng);
    BlockResult res;
    res.bits = n_symbols;
    for (std::size_t l = 0; l < records.size(); ++l)
        if (records[l].decided != frame.symbols[l]) ++res.errors;
    return res;
}

/// Runs `jobs` callables with at most n_threads in flight; results land in a
/// caller-indexed vector so the reduction order never depends on scheduling.
template <typename Job>
void run_parallel(const std::vector<Job>& jobs, unsigned n_threads) {
    if (n_threads <= 1 || jobs.size() <= 1) {
        for (const auto& j : jobs) j();
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const unsigned workers = std::min<unsigned>(n_threads, static_cast<unsigned>(jobs.size()));
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= jobs.size()) return;
                jobs[i]();
            }
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace detail

/// Deterministic simulated BER at one grid point. Blocks of symbols carry
/// independently derived RNG streams; early stopping is decided on whole
/// fixed-size waves of blocks so the result is thread-count independent.
inline CurvePoint simulate_ber_point(const NetworkConfig& net, double eb_n0_db, std::size_t n_bits,
                                     std::size_t min_errors, std::uint64_t master_seed,
                                     std::uint64_t point_tag, unsigned n_threads) {
    const double n0 = n0_for_eb_n0_db(net, eb_n0_db);
    constexpr std::size_t kBlockSymbols = 2048;
    constexpr std::size_t kWaveBlocks = 32;
    const std::size_t total_blocks = (n_bits + kBlockSymbols - 1) / kBlockSymbols;
    const std::uint64_t point_seed = derive_trial_seed(master_seed, point_tag);

    std::size_t bits = 0, errors = 0;
    std::size_t block = 0;
    while (block < total_blocks) {
        const std::size_t wave_end = std::min(block + kWaveBlocks, total_blocks);
        const std::size_t n_jobs = wave_end - block;
        std::vector<detail::BlockResult> results(n_jobs);
        std::vector<std::function<void()>> jobs;
        jobs.reserve(n_jobs);
        for (std::size_t i = 0; i < n_jobs; ++i) {
            const std::size_t b = block + i;
            const std::size_t n_symbols =
                std::min(kBlockSymbols, n_bits - b * kBlockSymbols);
            jobs.emplace_back([&, i, b, n_symbols] {
                results[i] = detail::run_sim_block(net, n0, n_symbols,
                                                  derive_trial_seed(point_seed, b));
            });
        }
        detail::run_parallel(jobs, n_threads);
        for (const auto& r : results) {
            bits += r.bits;
            errors += r.errors;
        }
        block = wave_end;
        if (bits >= n_bits / 10 && errors >= min_errors) break;
    }

    CurvePoint cp;
    cp.point.eb_n0_db = eb_n0_db;
    cp.point.method = BerMethod::Simulated;
    cp.point.ber = bits ? static_cast<double>(errors) / static_cast<double>(bits) : 0.0;
    cp.n_bits = bits;
    cp.n_errors = errors;
    cp.ci_half_width = wilson_half_width(errors, bits);
    return cp;
}

/// Deterministic parallel alpha collection (block-seeded, order-independent).
inline AlphaSample collect_alpha_parallel(const NetworkConfig& net, std::size_t n_samples,
                                          std::uint64_t master_seed, std::uint64_t tag,
                                          unsigned n_threads) {
    constexpr std::size_t kBlock = 65536;
    const std::size_t total_blocks = (n_samples + kBlock - 1) / kBlock;
    const std::uint64_t base_seed = derive_trial_seed(master_seed, tag);
    std::vector<AlphaSample> parts(total_blocks);
    std::vector<std::function<void()>> jobs;
    jobs.reserve(total_blocks);
    for (std::size_t b = 0; b < total_blocks; ++b) {
        const std::size_t n = std::min(kBlock, n_samples - b * kBlock);
        jobs.emplace_back([&, b, n] {
            Rng rng(derive_trial_seed(base_seed, b));
            parts[b] = collect_alpha(net, n, rng);
        });
    }
    detail::run_parallel(jobs, n_threads);
    AlphaSample out;
    out.config_fingerprint = network_fingerprint(net);
    out.values.reserve(n_samples);
    for (auto& p : parts)
        out.values.insert(out.values.end(), p.values.begin(), p.values.end());
    return out;
}

/// Full sweep: simulated BER per grid point plus both analytic routes from a
/// moment-matched fit of alpha at this configuration.
inline BerCurve run_sweep(const ExperimentConfig& cfg, unsigned n_threads) {
    cfg.validate();
    BerCurve curve;
    curve.config_fingerprint = network_fingerprint(cfg.network);
    curve.map_name = map_name(cfg.network.map);
    curve.beta = cfg.network.beta;
    curve.n_relays = cfg.network.n_relays;
    curve.master_seed = cfg.master_seed;

    const std::size_t fit_samples = std::max<std::size_t>(1000, std::min<std::size_t>(cfg.n_bits, 1'000'000));
    const AlphaSample alpha =
        collect_alpha_parallel(cfg.network, fit_samples, cfg.master_seed, 0xf17a5a, n_threads);
    curve.fit = fit_ggamma(alpha);

    for (std::size_t g = 0; g < cfg.eb_n0_grid_db.size(); ++g) {
        const double db = cfg.eb_n0_grid_db[g];
        curve.points.push_back(simulate_ber_point(cfg.network, db, cfg.n_bits, cfg.min_errors,
                                                  cfg.master_seed, g + 1, n_threads));
        const double n0 = n0_for_eb_n0_db(cfg.network, db);
        CurvePoint quad;
        quad.point.method = BerMethod::Quadrature;
        try {
            quad.point = ber_quadrature(curve.fit, n0);
            quad.point.eb_n0_db = db;
        } catch (const NumericError& e) {
            quad.valid = false;
            quad.note = e.what();
            quad.point.eb_n0_db = db;
        }
        curve.points.push_back(quad);
        CurvePoint mgf;
        mgf.point.method = BerMethod::MgfPade;
        try {
            mgf.point = ber_mgf(make_mgf_series(curve.fit, n0));
            mgf.point.eb_n0_db = db;
        } catch (const NumericError& e) {
            mgf.valid = false;
            mgf.note = e.what();
            mgf.point.eb_n0_db = db;
        }
        curve.points.push_back(mgf);
    }
    return curve;
}

namespace detail {

inline std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

/// CSV with the fixed schema; bit-exact across runs with the same seed.
inline std::string curve_to_csv(const BerCurve& curve) {
    std::ostringstream os;
    os << "eb_n0_db,method,ber,ci_half_width,n_bits,n_errors,map,beta,n_relays,seed\n";
    for (const auto& cp : curve.points) {
        if (!cp.valid) continue;
        os << detail::fmt17(cp.point.eb_n0_db) << ',' << to_string(cp.point.method) << ','
           << detail::fmt17(cp.point.ber) << ',' << detail::fmt17(cp.ci_half_width) << ','
           << cp.n_bits << ',' << cp.n_errors << ',' << curve.map_name << ',' << curve.beta << ','
           << curve.n_relays << ',' << curve.master_seed << '\n';
    }
    return os.str();
}

struct FitStudyResult {
    FitReport report;
    std::vector<HistogramBin> histogram;
    std::string map_name;
    int beta = 0;
    int n_relays = 0;
    std::size_t n_samples = 0;
};

/// Figs.-2/3-style study: collect alpha, fit all four candidate families.
inline FitStudyResult run_fit_study(const ExperimentConfig& cfg, unsigned n_threads) {
    cfg.network.validate();
    if (cfg.n_bits < 1000) throw ConfigError("sweep.n_bits: fit study needs at least 10^3 samples");
    FitStudyResult out;
    const AlphaSample alpha =
        collect_alpha_parallel(cfg.network, cfg.n_bits, cfg.master_seed, 0xf17a5a, n_threads);
    out.report = compare_candidates(alpha);
    out.histogram = make_histogram(alpha.values);
    out.map_name = map_name(cfg.network.map);
    out.beta = cfg.network.beta;
    out.n_relays = cfg.network.n_relays;
    out.n_samples = alpha.values.size();
    return out;
}

inline nlohmann::json fit_report_to_json(const FitStudyResult& r) {
    return nlohmann::json{{"map", r.map_name},
                          {"beta", r.beta},
                          {"n_relays", r.n_relays},
                          {"n_samples", r.n_samples},
                          {"v", r.report.ggamma.v},
                          {"m", r.report.ggamma.m},
                          {"omega", r.report.ggamma.omega},
                          {"ks_ggamma", r.report.ks_ggamma},
                          {"ks_rayleigh", r.report.ks_rayleigh},
                          {"ks_rician", r.report.ks_rician},
                          {"ks_nakagami", r.report.ks_nakagami}};
}

inline std::string histogram_to_csv(const std::vector<HistogramBin>& bins) {
    std::ostringstream os;
    os << "bin_left,bin_right,density\n";
    for (const auto& b : bins)
        os << detail::fmt17(b.left) << ',' << detail::fmt17(b.right) << ','
           << detail::fmt17(b.density) << '\n';
    return os.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::ios_base::failure("cannot open for writing: " + path);
    f << content;
    if (!f) throw std::ios_base::failure("write failed: " + path);
}

}  // namespace csk

#endif  // CSKLAB_HARNESS_HPP
