// csklab: chaos-shift-keying DF relay network BER lab.
//
// Subcommands:
//   sweep    simulated + analytic BER over an Eb/N0 grid (CSV)
//   fit      alpha histogram / distribution-fit study (JSON + CSV histogram)
//   compare  both, with a joint JSON report

#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "csklab/harness.hpp"

namespace {

struct CliOverrides {
    std::string config_path;
    std::string out_path;
    std::string map_name;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int beta = 0;
    int relays = -1;
    std::uint64_t bits = 0;
    std::string grid;
    int threads = 0;
};

void add_common_flags(CLI::App* sub, CliOverrides& o) {
    sub->add_option("--config", o.config_path, "Config file (INI-style)");
    sub->add_option("--out", o.out_path, "Output path (stdout when omitted)");
    sub->add_option("--seed", o.seed, "Master seed (64-bit)")->each([&](const std::string&) {
        o.seed_set = true;
    });
    sub->add_option("--threads", o.threads, "Worker threads (default: all cores, or CSK_LAB_THREADS)");
    sub->add_option("--map", o.map_name, "Chaotic map: cpf or pwl");
    sub->add_option("--beta", o.beta, "Spreading factor");
    sub->add_option("--relays", o.relays, "Number of DF relays");
    sub->add_option("--bits", o.bits, "Bits per grid point (sweep) / alpha samples (fit)");
    sub->add_option("--grid", o.grid, "Eb/N0 grid, start:step:stop in dB");
}

csk::ExperimentConfig build_config(const CliOverrides& o, csk::RunMode mode) {
    csk::ExperimentConfig cfg;
    if (!o.config_path.empty()) {
        std::ifstream f(o.config_path);
        if (!f) throw std::ios_base::failure("cannot open config: " + o.config_path);
        std::ostringstream ss;
        ss << f.rdbuf();
        cfg = csk::parse_config(ss.str());
    } else {
        cfg.network.p_j.assign(cfg.network.n_relays, 1.0);
        cfg.eb_n0_grid_db = {0.0, 5.0, 10.0, 15.0};
    }
    cfg.mode = mode;
    if (!o.map_name.empty()) {
        if (o.map_name == "cpf") cfg.network.map.tag = csk::ChaosMap::Cpf;
        else if (o.map_name == "pwl") cfg.network.map.tag = csk::ChaosMap::Pwl;
        else throw csk::ConfigError("--map must be cpf or pwl");
    }
    if (o.beta > 0) cfg.network.beta = o.beta;
    if (o.relays >= 0) {
        cfg.network.n_relays = o.relays;
        cfg.network.p_j.assign(o.relays, 1.0);
    }
    if (o.bits > 0) cfg.n_bits = o.bits;
    if (o.seed_set) cfg.master_seed = o.seed;
    if (!o.grid.empty()) cfg.eb_n0_grid_db = csk::parse_grid(o.grid);
    if (!o.out_path.empty()) cfg.output_path = o.out_path;
    cfg.validate();
    return cfg;
}

unsigned resolve_threads(int cli_threads) {
    if (cli_threads > 0) return static_cast<unsigned>(cli_threads);
    if (const char* env = std::getenv("CSK_LAB_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

void emit(const std::string& path, const std::string& content) {
    if (path.empty()) std::cout << content;
    else csk::write_file(path, content);
}

void warn_failed_points(const csk::BerCurve& curve) {
    for (const auto& cp : curve.points)
        if (!cp.valid)
            std::cerr << "warning: " << csk::to_string(cp.point.method) << " at "
                      << cp.point.eb_n0_db << " dB failed: " << cp.note << "\n";
}

int run(int argc, char** argv) {
    CLI::App app{"Chaos-shift-keying decode-and-forward relay BER lab"};
    app.require_subcommand(1);
    CliOverrides o;
    auto* sweep = app.add_subcommand("sweep", "BER sweep over an Eb/N0 grid");
    auto* fit = app.add_subcommand("fit", "alpha distribution fit study");
    auto* compare = app.add_subcommand("compare", "sweep + fit joint report");
    add_common_flags(sweep, o);
    add_common_flags(fit, o);
    add_common_flags(compare, o);
    CLI11_PARSE(app, argc, argv);

    const unsigned threads = resolve_threads(o.threads);

    if (sweep->parsed()) {
        const auto cfg = build_config(o, csk::RunMode::Sweep);
        const auto curve = csk::run_sweep(cfg, threads);
        warn_failed_points(curve);
        emit(cfg.output_path, csk::curve_to_csv(curve));
    } else if (fit->parsed()) {
        const auto cfg = build_config(o, csk::RunMode::Fit);
        const auto study = csk::run_fit_study(cfg, threads);
        emit(cfg.output_path, csk::fit_report_to_json(study).dump(2) + "\n");
        if (!cfg.output_path.empty())
            csk::write_file(cfg.output_path + ".hist.csv", csk::histogram_to_csv(study.histogram));
    } else if (compare->parsed()) {
        const auto cfg = build_config(o, csk::RunMode::Compare);
        const auto curve = csk::run_sweep(cfg, threads);
        warn_failed_points(curve);
        auto fit_cfg = cfg;
        const auto study = csk::run_fit_study(fit_cfg, threads);
        nlohmann::json joint = csk::fit_report_to_json(study);
        nlohmann::json pts = nlohmann::json::array();
        for (const auto& cp : curve.points) {
            if (!cp.valid) continue;
            pts.push_back({{"eb_n0_db", cp.point.eb_n0_db},
                           {"method", csk::to_string(cp.point.method)},
                           {"ber", cp.point.ber},
                           {"ci_half_width", cp.ci_half_width}});
        }
        joint["ber_points"] = pts;
        joint["seed"] = cfg.master_seed;
        if (cfg.output_path.empty()) {
            std::cout << joint.dump(2) << "\n" << csk::curve_to_csv(curve);
        } else {
            csk::write_file(cfg.output_path + ".json", joint.dump(2) + "\n");
            csk::write_file(cfg.output_path + ".csv", csk::curve_to_csv(curve));
            csk::write_file(cfg.output_path + ".hist.csv",
                            csk::histogram_to_csv(study.histogram));
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const csk::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const csk::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 2;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 3;
    }
}
