#include "freelim/freelim_c.h"

#include "freelim/cs_replica.hpp"
#include "freelim/detectors.hpp"
#include "freelim/errors.hpp"
#include "freelim/free_calc.hpp"
#include "freelim/mc_lab.hpp"
#include "freelim/ncpart.hpp"
#include "freelim/replica.hpp"
#include "freelim/spectra.hpp"
#include "freelim/transforms.hpp"

#include <cmath>
#include <cstring>
#include <string>

using namespace freelim;

struct fl_law {
    SpectralLaw law;
};

namespace {

thread_local std::string g_last_error;

fl_status fail(fl_status code, const std::string& what) {
    g_last_error = what;
    return code;
}

// Exceptions map onto status codes at the boundary; nothing C++ escapes.
template <typename Fn>
fl_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const solver_error& e) {
        return fail(FL_ESOLVER, e.what());
    } catch (const precision_error& e) {
        return fail(FL_EPRECISION, e.what());
    } catch (const unsupported_error& e) {
        return fail(FL_EUNSUPPORTED, e.what());
    } catch (const std::overflow_error& e) {
        return fail(FL_EOVERFLOW, e.what());
    } catch (const std::domain_error& e) {
        return fail(FL_EDOMAIN, e.what());
    } catch (const std::length_error& e) {
        return fail(FL_EDOMAIN, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(FL_EINVAL, e.what());
    } catch (const std::exception& e) {
        return fail(FL_EINVAL, e.what());
    }
}

fl_status make_law(const std::string& kind, const double* params, int n_params,
                   SpectralLaw& out) {
    auto need = [&](int n) {
        if (n_params < n || (n > 0 && params == nullptr))
            throw std::invalid_argument("fl_law_create: missing parameters for " + kind);
    };
    if (kind == "semicircle") {
        out = SpectralLaw::semicircle();
    } else if (kind == "quarter_circle") {
        out = SpectralLaw::quarter_circle();
    } else if (kind == "full_circle") {
        out = SpectralLaw::full_circle();
    } else if (kind == "haar_circle") {
        out = SpectralLaw::haar_circle();
    } else if (kind == "inverse_semicircle") {
        out = SpectralLaw::inverse_semicircle();
    } else if (kind == "marchenko_pastur" || kind == "mp") {
        need(1);
        out = SpectralLaw::marchenko_pastur(params[0]);
    } else if (kind == "ginibre_product") {
        need(1);
        out = SpectralLaw::ginibre_product(static_cast<int>(params[0]));
    } else if (kind == "point_mass") {
        need(1);
        out = SpectralLaw::point_mass(params[0]);
    } else if (kind == "binary") {
        out = SpectralLaw::binary_symmetric();
    } else if (kind == "two_point") {
        need(4);
        out = SpectralLaw::from_atoms({{params[0], params[1]}, {params[2], params[3]}});
    } else {
        throw unsupported_error("fl_law_create: unknown kind '" + kind + "'");
    }
    return FL_OK;
}

}  // namespace

extern "C" {

const char* fl_version(void) { return "0.1.0"; }

const char* fl_last_error(void) { return g_last_error.c_str(); }

fl_status fl_law_create(const char* kind, const double* params, int n_params,
                        fl_law** out) {
    if (!kind || !out) return fail(FL_EINVAL, "fl_law_create: null argument");
    return guarded([&] {
        SpectralLaw law = SpectralLaw::semicircle();
        fl_status st = make_law(kind, params, n_params, law);
        if (st != FL_OK) return st;
        *out = new fl_law{std::move(law)};
        return FL_OK;
    });
}

void fl_law_free(fl_law* law) { delete law; }

fl_status fl_law_density(const fl_law* law, double re, double im, double* out) {
    if (!law || !out) return fail(FL_EINVAL, "fl_law_density: null argument");
    return guarded([&] {
        *out = law->law.planar() ? law->law.density(std::complex<double>(re, im))
                                 : law->law.density(re);
        return FL_OK;
    });
}

fl_status fl_law_moment(const fl_law* law, int k, double* out) {
    if (!law || !out) return fail(FL_EINVAL, "fl_law_moment: null argument");
    return guarded([&] {
        *out = law->law.moment(k);
        return FL_OK;
    });
}

fl_status fl_law_total_mass(const fl_law* law, double* out) {
    if (!law || !out) return fail(FL_EINVAL, "fl_law_total_mass: null argument");
    return guarded([&] {
        *out = law->law.total_mass();
        return FL_OK;
    });
}

fl_status fl_law_descriptor(const fl_law* law, char* buf, size_t cap,
                            size_t* out_len) {
    if (!law || !out_len) return fail(FL_EINVAL, "fl_law_descriptor: null argument");
    return guarded([&] {
        std::string json = law->law.descriptor_json();
        *out_len = json.size();
        if (buf && cap > 0) {
            size_t n = std::min(cap - 1, json.size());
            std::memcpy(buf, json.data(), n);
            buf[n] = '\0';
        }
        return FL_OK;
    });
}

fl_status fl_catalan(int n, uint64_t* out) {
    if (!out) return fail(FL_EINVAL, "fl_catalan: null output");
    return guarded([&] {
        *out = catalan(n);
        return FL_OK;
    });
}

fl_status fl_stieltjes(const fl_law* law, double s_re, double s_im, double* out_re,
                       double* out_im) {
    if (!law || !out_re || !out_im) return fail(FL_EINVAL, "fl_stieltjes: null argument");
    return guarded([&] {
        cplx g = stieltjes_of_law(law->law, cplx(s_re, s_im));
        *out_re = g.real();
        *out_im = g.imag();
        return FL_OK;
    });
}

fl_status fl_r_transform(const fl_law* law, double w_re, double w_im,
                         double* out_re, double* out_im) {
    if (!law || !out_re || !out_im)
        return fail(FL_EINVAL, "fl_r_transform: null argument");
    return guarded([&] {
        cplx r = law_r_transform(law->law, cplx(w_re, w_im));
        *out_re = r.real();
        *out_im = r.imag();
        return FL_OK;
    });
}

fl_status fl_s_transform(const fl_law* law, double z_re, double z_im,
                         double* out_re, double* out_im) {
    if (!law || !out_re || !out_im)
        return fail(FL_EINVAL, "fl_s_transform: null argument");
    return guarded([&] {
        cplx s = law_s_transform(law->law, cplx(z_re, z_im));
        *out_re = s.real();
        *out_im = s.imag();
        return FL_OK;
    });
}

fl_status fl_r_s_duality_residual(const fl_law* law, double z_re, double z_im,
                                  double* out) {
    if (!law || !out) return fail(FL_EINVAL, "fl_r_s_duality_residual: null argument");
    return guarded([&] {
        *out = r_s_duality_check(law->law, cplx(z_re, z_im));
        return FL_OK;
    });
}

fl_status fl_density_from_stieltjes(const fl_law* law, const double* grid, int n,
                                    double* out_density) {
    if (!law || !grid || !out_density || n < 1)
        return fail(FL_EINVAL, "fl_density_from_stieltjes: bad arguments");
    return guarded([&] {
        std::vector<double> g(grid, grid + n);
        auto inv = density_from_stieltjes(
            [&](cplx s) { return stieltjes_of_law(law->law, s); }, g);
        for (int i = 0; i < n; ++i) out_density[i] = inv.density[static_cast<size_t>(i)];
        return FL_OK;
    });
}

fl_status fl_convolve(const char* op, const fl_law* a, const fl_law* b, int n_clt,
                      const double* grid, int n, double* out_density) {
    if (!op || !a || !grid || !out_density || n < 1)
        return fail(FL_EINVAL, "fl_convolve: bad arguments");
    return guarded([&] {
        std::vector<double> g(grid, grid + n);
        SampledDensity d;
        std::string o(op);
        if (o == "add") {
            if (!b) return fail(FL_EINVAL, "fl_convolve: add needs two laws");
            d = add_free_convolve(a->law, b->law, g);
        } else if (o == "mul") {
            if (!b) return fail(FL_EINVAL, "fl_convolve: mul needs two laws");
            d = mul_free_convolve(a->law, b->law, g);
        } else if (o == "clt") {
            d = free_clt(a->law, n_clt, g);
        } else {
            return fail(FL_EINVAL, "fl_convolve: op must be add, mul, or clt");
        }
        for (int i = 0; i < n; ++i) out_density[i] = d.values[static_cast<size_t>(i)];
        return FL_OK;
    });
}

fl_status fl_sinr_asymptotic(double beta, double power, double sigma0_sq,
                             double* out) {
    if (!out) return fail(FL_EINVAL, "fl_sinr_asymptotic: null output");
    return guarded([&] {
        *out = mmse_sinr_asymptotic_equal_power(beta, power, sigma0_sq);
        return FL_OK;
    });
}

fl_status fl_tse_hanly_eta(double beta, double power, double sigma0_sq,
                           double* out) {
    if (!out) return fail(FL_EINVAL, "fl_tse_hanly_eta: null output");
    return guarded([&] {
        ChannelParams p{beta, power, sigma0_sq, SpectralLaw::point_mass(power)};
        *out = tse_hanly_eta(p);
        return FL_OK;
    });
}

fl_status fl_pe_sinr(double beta, double power, double sigma0_sq, int degree,
                     double* out) {
    if (!out) return fail(FL_EINVAL, "fl_pe_sinr: null output");
    return guarded([&] {
        *out = pe_sinr_recursion(beta, power, sigma0_sq, degree);
        return FL_OK;
    });
}

fl_status fl_bsc_capacity(double crossover, double* out) {
    if (!out) return fail(FL_EINVAL, "fl_bsc_capacity: null output");
    return guarded([&] {
        *out = bsc_capacity(crossover);
        return FL_OK;
    });
}

fl_status fl_capacity_per_dim(const fl_law* law, double power, double sigma0_sq,
                              double* out) {
    if (!law || !out) return fail(FL_EINVAL, "fl_capacity_per_dim: null argument");
    return guarded([&] {
        *out = capacity_per_dim(law->law, power, sigma0_sq);
        return FL_OK;
    });
}

fl_status fl_replica_solve(const char* prior, double beta, double sigma_sq,
                           double sigma0_sq, fl_replica_state* out, int cap,
                           int* n_out) {
    if (!prior || !out || !n_out || cap < 1)
        return fail(FL_EINVAL, "fl_replica_solve: bad arguments");
    return guarded([&] {
        std::string p(prior);
        std::vector<ReplicaState> states;
        if (p == "gaussian") {
            states.push_back(
                rs_fixed_point_gaussian(ReplicaProblem::gaussian(beta, sigma_sq, sigma0_sq)));
        } else if (p == "binary") {
            states = rs_fixed_point_binary(ReplicaProblem::binary(beta, sigma_sq, sigma0_sq));
        } else {
            return fail(FL_EINVAL, "fl_replica_solve: prior must be gaussian or binary");
        }
        int n = std::min<int>(cap, static_cast<int>(states.size()));
        for (int i = 0; i < n; ++i) {
            const auto& s = states[static_cast<size_t>(i)];
            out[i] = {s.E, s.F, s.m, s.q, s.p, s.free_energy, ber_from_state(s),
                      s.converged ? 1 : 0};
        }
        *n_out = n;
        return FL_OK;
    });
}

fl_status fl_replica_sweep(double sigma0_sq, double beta_min, double beta_max,
                           int steps, fl_replica_sweep_row* rows, int cap,
                           int* n_out, double* window_lo, double* window_hi,
                           double* beta_star) {
    if (!rows || !n_out || steps < 2 || beta_min >= beta_max)
        return fail(FL_EINVAL, "fl_replica_sweep: bad arguments");
    return guarded([&] {
        std::vector<double> betas;
        for (int i = 0; i < steps; ++i)
            betas.push_back(beta_min + (beta_max - beta_min) * i / (steps - 1));
        auto rep = phase_transition_sweep(sigma0_sq, betas);
        int n = 0;
        for (const auto& pt : rep.points) {
            for (size_t b = 0; b < pt.branches.size() && n < cap; ++b) {
                const auto& s = pt.branches[b];
                rows[n++] = {pt.beta,
                             static_cast<int>(b),
                             s.E,
                             ber_from_state(s),
                             s.free_energy,
                             static_cast<int>(b) == pt.selected ? 1 : 0};
            }
        }
        *n_out = n;
        if (window_lo) *window_lo = rep.window_lo.value_or(NAN);
        if (window_hi) *window_hi = rep.window_hi.value_or(NAN);
        if (beta_star) *beta_star = rep.beta_star.value_or(NAN);
        return FL_OK;
    });
}

fl_status fl_cs_fixed_point(double beta, double sigma0_sq, double gamma, double rho,
                            fl_cs_state* out, int cap, int* n_out) {
    if (!out || !n_out || cap < 1)
        return fail(FL_EINVAL, "fl_cs_fixed_point: bad arguments");
    return guarded([&] {
        CsProblem prob;
        prob.beta = beta;
        prob.sigma0_sq = sigma0_sq;
        prob.gamma = gamma;
        prob.rho = rho;
        auto states = l0_state_evolution(prob);
        int n = std::min<int>(cap, static_cast<int>(states.size()));
        for (int i = 0; i < n; ++i) {
            const auto& s = states[static_cast<size_t>(i)];
            out[i] = {s.sigma_eff_sq, s.gamma_p, s.mse, s.residual};
        }
        *n_out = n;
        return FL_OK;
    });
}

fl_status fl_sparsity_bound(int n, int k, double* out) {
    if (!out) return fail(FL_EINVAL, "fl_sparsity_bound: null output");
    return guarded([&] {
        *out = sparsity_bound(n, k);
        return FL_OK;
    });
}

fl_status fl_mc_ks(const char* ensemble, const fl_law* law, int n, int k,
                   uint64_t seed, double* out_ks) {
    if (!ensemble || !out_ks) return fail(FL_EINVAL, "fl_mc_ks: bad arguments");
    return guarded([&] {
        std::string e(ensemble);
        if (e == "wigner") {
            if (!law) return fail(FL_EINVAL, "fl_mc_ks: wigner needs a law");
            auto emp = spectrum(sample(EnsembleSpec::wigner_sym(n, seed)),
                                SpectrumMode::eig_hermitian);
            *out_ks = ks_distance(emp, law->law);
        } else if (e == "iid" || e == "iid_pm1") {
            if (!law) return fail(FL_EINVAL, "fl_mc_ks: iid needs a law");
            auto spec = e == "iid" ? EnsembleSpec::iid_gaussian(n, k, seed)
                                   : EnsembleSpec::iid_pm1(n, k, seed);
            auto emp = spectrum(sample(spec), SpectrumMode::singular_sq);
            *out_ks = ks_distance(emp, law->law);
        } else if (e == "haar") {
            auto emp = spectrum(sample(EnsembleSpec::haar_unitary(n, seed)),
                                SpectrumMode::eig_complex);
            *out_ks = phase_ks(emp);
        } else if (e == "circle") {
            if (!law) return fail(FL_EINVAL, "fl_mc_ks: circle needs a planar law");
            auto emp = spectrum(sample(EnsembleSpec::iid_gaussian(n, n, seed)),
                                SpectrumMode::eig_complex);
            *out_ks = radial_ks(emp, law->law);
        } else {
            return fail(FL_EINVAL, "fl_mc_ks: unknown ensemble '" + e + "'");
        }
        return FL_OK;
    });
}

fl_status fl_mc_moment(const char* ensemble, int n, int k, uint64_t seed, int order,
                       double* out) {
    if (!ensemble || !out) return fail(FL_EINVAL, "fl_mc_moment: bad arguments");
    return guarded([&] {
        std::string e(ensemble);
        EmpiricalSpectrum emp;
        if (e == "wigner") {
            emp = spectrum(sample(EnsembleSpec::wigner_sym(n, seed)),
                           SpectrumMode::eig_hermitian);
        } else if (e == "iid") {
            emp = spectrum(sample(EnsembleSpec::iid_gaussian(n, k, seed)),
                           SpectrumMode::singular_sq);
        } else if (e == "iid_pm1") {
            emp = spectrum(sample(EnsembleSpec::iid_pm1(n, k, seed)),
                           SpectrumMode::singular_sq);
        } else {
            return fail(FL_EINVAL, "fl_mc_moment: unknown ensemble '" + e + "'");
        }
        *out = empirical_moment(emp, order);
        return FL_OK;
    });
}

} /* extern "C" */
