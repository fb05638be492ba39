// freelim command line: reproducible spectral-law, free-convolution, Monte
// Carlo, detector, replica, and compressed-sensing studies emitting plot-ready
// CSV. Everything goes through the C API.
//
// Exit codes: 0 ok, 2 usage, 3 solver failure, 4 precision failure.

#include <freelim/freelim_c.h>

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace {

int status_to_exit(fl_status st) {
    switch (st) {
        case FL_OK: return 0;
        case FL_ESOLVER: return 3;
        case FL_EPRECISION: return 4;
        default: return 2;
    }
}

int bail(fl_status st) {
    std::cerr << "error: " << fl_last_error() << "\n";
    return status_to_exit(st);
}

struct LawHandle {
    fl_law* ptr = nullptr;
    ~LawHandle() { fl_law_free(ptr); }
};

// laws are spelled kind[:p1[:p2...]], e.g. "mp:0.5", "point_mass:2", "binary"
fl_status parse_law(const std::string& spec, LawHandle& out) {
    std::string kind = spec;
    std::vector<double> params;
    auto pos = spec.find(':');
    if (pos != std::string::npos) {
        kind = spec.substr(0, pos);
        std::stringstream ss(spec.substr(pos + 1));
        std::string tok;
        while (std::getline(ss, tok, ':')) params.push_back(std::stod(tok));
    }
    return fl_law_create(kind.c_str(), params.empty() ? nullptr : params.data(),
                         static_cast<int>(params.size()), &out.ptr);
}

double q_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

struct Output {
    std::unique_ptr<std::ofstream> file;
    std::ostream* os = &std::cout;

    bool open(const std::string& path) {
        if (path.empty()) return true;
        file = std::make_unique<std::ofstream>(path);
        if (!*file) return false;
        os = file.get();
        return true;
    }
};

void write_header(std::ostream& os, const std::string& cmd, uint64_t seed,
                  const std::string& flags) {
    os << "# freelim " << fl_version() << "\n";
    os << "# command: " << cmd << "\n";
    os << "# seed: " << seed << "\n";
    os << "# flags: " << flags << "\n";
}

std::string echo_flags(int argc, char** argv) {
    std::string s;
    for (int i = 1; i < argc; ++i) {
        if (i > 1) s += ' ';
        s += argv[i];
    }
    return s;
}

// key=value file, applied as defaults before flag parsing
void load_config(CLI::App& app, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
    std::string line;
    std::vector<std::string> args;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        args.push_back("--" + line.substr(0, eq));
        args.push_back(line.substr(eq + 1));
    }
    std::vector<const char*> argv;
    argv.push_back("config");
    for (auto& a : args) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"freelim: asymptotic random-matrix and replica analysis"};
    app.require_subcommand(0, 1);

    uint64_t seed = 1;
    std::string out_path, format = "csv", config_path;
    bool describe = false;
    app.add_option("--seed", seed, "RNG seed recorded in every output");
    app.add_option("--output", out_path, "output file (default stdout)");
    app.add_option("--format", format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--config", config_path, "key=value file with flag defaults");
    app.add_flag("--describe", describe, "describe the output columns and exit");

    // ---- law ----
    auto* law_cmd = app.add_subcommand("law", "density curve and moment table");
    std::string law_kind = "semicircle";
    double law_beta = 1.0, law_location = 1.0;
    int law_factors = 2, law_points = 200, law_moments = 8;
    double grid_min = 0.0, grid_max = 0.0;
    law_cmd->add_option("--kind", law_kind,
                        "semicircle|quarter_circle|full_circle|haar_circle|"
                        "inverse_semicircle|mp|ginibre_product|point_mass|binary");
    law_cmd->add_option("--beta", law_beta, "aspect ratio for mp");
    law_cmd->add_option("--factors", law_factors, "factor count for ginibre_product");
    law_cmd->add_option("--location", law_location, "location for point_mass");
    law_cmd->add_option("--grid-min", grid_min);
    law_cmd->add_option("--grid-max", grid_max);
    law_cmd->add_option("--points", law_points);
    law_cmd->add_option("--moments", law_moments, "moment table order");

    // ---- convolve ----
    auto* conv_cmd = app.add_subcommand("convolve", "free convolution densities");
    std::string conv_op = "add", conv_a = "binary", conv_b = "binary";
    int conv_n = 2, conv_points = 200;
    double conv_min = 0.0, conv_max = 0.0;
    conv_cmd->add_option("--op", conv_op)->check(CLI::IsMember({"add", "mul", "clt"}));
    conv_cmd->add_option("--a", conv_a, "first law, kind[:params]");
    conv_cmd->add_option("--b", conv_b, "second law (add/mul)");
    conv_cmd->add_option("--n", conv_n, "term count for clt");
    conv_cmd->add_option("--grid-min", conv_min);
    conv_cmd->add_option("--grid-max", conv_max);
    conv_cmd->add_option("--points", conv_points);
    conv_cmd->add_option("--law", conv_a, "alias of --a for clt");

    // ---- mc-compare ----
    auto* mc_cmd = app.add_subcommand("mc-compare",
                                      "Monte Carlo spectrum vs asymptotic law");
    std::string mc_ensemble = "wigner", mc_law = "semicircle";
    int mc_n = 512, mc_k = 256, mc_seeds = 1;
    mc_cmd->add_option("--ensemble", mc_ensemble,
                       "wigner|iid|iid_pm1|haar|circle");
    mc_cmd->add_option("--law", mc_law, "law spec, kind[:params]");
    mc_cmd->add_option("--n", mc_n);
    mc_cmd->add_option("--k", mc_k);
    mc_cmd->add_option("--seeds", mc_seeds, "number of seeds (replicates)");

    // ---- sinr ----
    auto* sinr_cmd = app.add_subcommand("sinr", "large-system MMSE SINR analysis");
    double sinr_beta = 0.5, sinr_snr_db = 10.0;
    std::string sinr_detector = "mmse", load_sweep;
    sinr_cmd->add_option("--beta", sinr_beta, "load K/N");
    sinr_cmd->add_option("--snr-db", sinr_snr_db, "10 log10(P/sigma0^2), P = 1");
    sinr_cmd->add_option("--detector", sinr_detector, "mmse, mf, or pe:D");
    sinr_cmd->add_option("--load-sweep", load_sweep, "min,max,steps over beta");

    // ---- replica-sweep ----
    auto* rep_cmd = app.add_subcommand("replica-sweep",
                                       "replica fixed-point branches over load");
    double rep_snr_db = 10.0, rep_bmin = 1.0, rep_bmax = 4.0;
    int rep_steps = 60;
    std::string rep_prior = "binary";
    rep_cmd->add_option("--snr-db", rep_snr_db, "10 log10(P/sigma0^2), P = 1");
    rep_cmd->add_option("--beta-min", rep_bmin);
    rep_cmd->add_option("--beta-max", rep_bmax);
    rep_cmd->add_option("--steps", rep_steps);
    rep_cmd->add_option("--prior", rep_prior)->check(CLI::IsMember({"gaussian", "binary"}));

    // ---- cs-fixed-point ----
    auto* cs_cmd = app.add_subcommand("cs-fixed-point",
                                      "l0 state-evolution fixed points");
    double cs_beta = 2.0, cs_sigma0 = 0.01, cs_gamma = 0.05, cs_rho = 0.1;
    cs_cmd->add_option("--beta", cs_beta, "measurement ratio K/N");
    cs_cmd->add_option("--sigma0", cs_sigma0, "true noise variance");
    cs_cmd->add_option("--gamma", cs_gamma, "algorithm parameter");
    cs_cmd->add_option("--rho", cs_rho, "nonzero fraction of the signal prior");

    try {
        app.parse(argc, argv);
        if (!config_path.empty()) load_config(app, config_path);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (describe) {
        std::cout
            << "law:            columns x, density; then # moment lines k, m_k\n"
            << "convolve:       columns x, density\n"
            << "mc-compare:     columns ensemble, n, seed, statistic, value\n"
            << "sinr:           columns beta, detector, sinr, ber_gaussian_approx\n"
            << "replica-sweep:  columns beta, branch_id, E, ber, free_energy, selected\n"
            << "cs-fixed-point: columns sigma_eff_sq, gamma_p, mse, branch\n"
            << "snr-db convention: sigma0^2 = 10^(-snr_db/10) with P = 1\n";
        return 0;
    }

    Output out;
    if (!out.open(out_path)) {
        std::cerr << "error: cannot open output file " << out_path << "\n";
        return 2;
    }
    std::ostream& os = *out.os;
    os.precision(12);
    std::string flags = echo_flags(argc, argv);

    if (law_cmd->parsed()) {
        std::string spec = law_kind;
        if (law_kind == "mp" || law_kind == "marchenko_pastur")
            spec += ":" + std::to_string(law_beta);
        else if (law_kind == "ginibre_product")
            spec += ":" + std::to_string(law_factors);
        else if (law_kind == "point_mass")
            spec += ":" + std::to_string(law_location);
        LawHandle law;
        fl_status st = parse_law(spec, law);
        if (st != FL_OK) return bail(st);
        if (grid_min == 0.0 && grid_max == 0.0) {
            grid_min = -3.0;
            grid_max = 3.0;
            if (law_kind == "mp" || law_kind == "quarter_circle") {
                grid_min = 0.0;
                grid_max = law_kind == "mp"
                               ? (1.0 + std::sqrt(law_beta)) * (1.0 + std::sqrt(law_beta)) + 0.5
                               : 2.5;
            }
            if (law_kind == "full_circle" || law_kind == "ginibre_product" ||
                law_kind == "haar_circle") {
                grid_min = 0.0;
                grid_max = 1.2;
            }
        }
        write_header(os, "law", seed, flags);
        os << "x,density\n";
        for (int i = 0; i < law_points; ++i) {
            double x = grid_min + (grid_max - grid_min) * (i + 0.5) / law_points;
            double d = 0.0;
            st = fl_law_density(law.ptr, x, 0.0, &d);
            if (st != FL_OK) return bail(st);
            os << x << "," << d << "\n";
        }
        os << "# moments\n# k,m_k\n";
        for (int k = 1; k <= law_moments; ++k) {
            double m = 0.0;
            st = fl_law_moment(law.ptr, k, &m);
            if (st != FL_OK) return bail(st);
            os << "# " << k << "," << m << "\n";
        }
        return 0;
    }

    if (conv_cmd->parsed()) {
        LawHandle a, b;
        fl_status st = parse_law(conv_a, a);
        if (st != FL_OK) return bail(st);
        if (conv_op != "clt") {
            st = parse_law(conv_b, b);
            if (st != FL_OK) return bail(st);
        }
        if (conv_min == 0.0 && conv_max == 0.0) {
            conv_min = conv_op == "mul" ? 0.001 : -3.0;
            conv_max = conv_op == "mul" ? 8.0 : 3.0;
        }
        std::vector<double> grid(static_cast<size_t>(conv_points));
        for (int i = 0; i < conv_points; ++i)
            grid[static_cast<size_t>(i)] =
                conv_min + (conv_max - conv_min) * (i + 0.5) / conv_points;
        std::vector<double> density(grid.size());
        st = fl_convolve(conv_op.c_str(), a.ptr, b.ptr, conv_n, grid.data(),
                         conv_points, density.data());
        if (st != FL_OK) return bail(st);
        write_header(os, "convolve", seed, flags);
        os << "x,density\n";
        for (int i = 0; i < conv_points; ++i)
            os << grid[static_cast<size_t>(i)] << ","
               << density[static_cast<size_t>(i)] << "\n";
        return 0;
    }

    if (mc_cmd->parsed()) {
        LawHandle law;
        bool needs_law = mc_ensemble != "haar";
        if (needs_law) {
            fl_status st = parse_law(mc_law, law);
            if (st != FL_OK) return bail(st);
        }
        write_header(os, "mc-compare", seed, flags);
        os << "ensemble,n,seed,statistic,value\n";
        for (int r = 0; r < mc_seeds; ++r) {
            uint64_t s = seed + static_cast<uint64_t>(r);
            double ks = 0.0;
            fl_status st = fl_mc_ks(mc_ensemble.c_str(), law.ptr, mc_n, mc_k, s, &ks);
            if (st != FL_OK) return bail(st);
            os << mc_ensemble << "," << mc_n << "," << s << ",ks," << ks << "\n";
        }
        return 0;
    }

    if (sinr_cmd->parsed()) {
        double sigma0_sq = std::pow(10.0, -sinr_snr_db / 10.0);
        std::vector<double> betas{sinr_beta};
        if (!load_sweep.empty()) {
            double lo, hi;
            int steps;
            if (std::sscanf(load_sweep.c_str(), "%lf,%lf,%d", &lo, &hi, &steps) != 3 ||
                steps < 2) {
                std::cerr << "error: --load-sweep wants min,max,steps\n";
                return 2;
            }
            betas.clear();
            for (int i = 0; i < steps; ++i)
                betas.push_back(lo + (hi - lo) * i / (steps - 1));
        }
        write_header(os, "sinr", seed, flags);
        os << "beta,detector,sinr,ber_gaussian_approx\n";
        for (double b : betas) {
            double v = 0.0;
            fl_status st;
            if (sinr_detector == "mmse") {
                st = fl_sinr_asymptotic(b, 1.0, sigma0_sq, &v);
            } else if (sinr_detector == "mf") {
                st = fl_pe_sinr(b, 1.0, sigma0_sq, 1, &v);
            } else if (sinr_detector.rfind("pe:", 0) == 0) {
                int d = std::atoi(sinr_detector.c_str() + 3);
                if (d < 1) {
                    std::cerr << "error: pe:D wants D >= 1\n";
                    return 2;
                }
                st = fl_pe_sinr(b, 1.0, sigma0_sq, d, &v);
            } else {
                std::cerr << "error: unknown detector " << sinr_detector << "\n";
                return 2;
            }
            if (st != FL_OK) return bail(st);
            os << b << "," << sinr_detector << "," << v << "," << q_tail(std::sqrt(v))
               << "\n";
        }
        return 0;
    }

    if (rep_cmd->parsed()) {
        double sigma0_sq = std::pow(10.0, -rep_snr_db / 10.0);
        if (rep_prior == "gaussian") {
            write_header(os, "replica-sweep", seed, flags);
            os << "beta,branch_id,E,ber,free_energy,selected\n";
            for (int i = 0; i < rep_steps; ++i) {
                double b = rep_bmin + (rep_bmax - rep_bmin) * i / (rep_steps - 1);
                fl_replica_state st_out;
                int n = 0;
                fl_status st =
                    fl_replica_solve("gaussian", b, sigma0_sq, sigma0_sq, &st_out, 1, &n);
                if (st != FL_OK) return bail(st);
                os << b << ",0," << st_out.E << "," << st_out.ber << ","
                   << st_out.free_energy << ",1\n";
            }
            return 0;
        }
        std::vector<fl_replica_sweep_row> rows(static_cast<size_t>(rep_steps) * 8);
        int n = 0;
        double wlo = 0, whi = 0, bstar = 0;
        fl_status st =
            fl_replica_sweep(sigma0_sq, rep_bmin, rep_bmax, rep_steps, rows.data(),
                             static_cast<int>(rows.size()), &n, &wlo, &whi, &bstar);
        if (st != FL_OK) return bail(st);
        write_header(os, "replica-sweep", seed, flags);
        if (!std::isnan(wlo)) os << "# multi_solution_window_lo: " << wlo << "\n";
        if (!std::isnan(whi)) os << "# multi_solution_window_hi: " << whi << "\n";
        if (!std::isnan(bstar)) os << "# beta_star: " << bstar << "\n";
        os << "# ansatz: RS\n";
        os << "beta,branch_id,E,ber,free_energy,selected\n";
        for (int i = 0; i < n; ++i)
            os << rows[static_cast<size_t>(i)].beta << ","
               << rows[static_cast<size_t>(i)].branch << ","
               << rows[static_cast<size_t>(i)].E << ","
               << rows[static_cast<size_t>(i)].ber << ","
               << rows[static_cast<size_t>(i)].free_energy << ","
               << rows[static_cast<size_t>(i)].selected << "\n";
        return 0;
    }

    if (cs_cmd->parsed()) {
        fl_cs_state states[16];
        int n = 0;
        fl_status st =
            fl_cs_fixed_point(cs_beta, cs_sigma0, cs_gamma, cs_rho, states, 16, &n);
        if (st != FL_OK) return bail(st);
        write_header(os, "cs-fixed-point", seed, flags);
        os << "# ansatz: RS (no validity test available for the MAP case)\n";
        os << "sigma_eff_sq,gamma_p,mse,branch\n";
        for (int i = 0; i < n; ++i)
            os << states[i].sigma_eff_sq << "," << states[i].gamma_p << ","
               << states[i].mse << "," << i << "\n";
        return 0;
    }

    std::cerr << app.help() << "\n";
    return 2;
}
