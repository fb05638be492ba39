/* freelim C API: spectral laws, free-probability transforms, large-system
 * detector analysis, replica fixed points, and Monte Carlo validation behind
 * opaque handles and status codes. All functions return fl_status; outputs go
 * through pointers. fl_last_error() describes the most recent failure on the
 * calling thread. */

#ifndef FREELIM_C_H
#define FREELIM_C_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define FL_API __declspec(dllexport)
#else
#define FL_API __attribute__((visibility("default")))
#endif

typedef enum fl_status {
    FL_OK = 0,
    FL_EINVAL = 1,      /* bad arguments / usage */
    FL_EDOMAIN = 2,     /* parameter outside the operation's domain */
    FL_ESOLVER = 3,     /* fixed point or root finding did not converge */
    FL_EPRECISION = 4,  /* requested accuracy unattainable */
    FL_EUNSUPPORTED = 5,/* operation undefined for this law kind */
    FL_EOVERFLOW = 6    /* exact integer result out of range */
} fl_status;

FL_API const char* fl_version(void);
FL_API const char* fl_last_error(void);

/* ---- spectral laws ------------------------------------------------------ */

typedef struct fl_law fl_law;

/* kinds: "semicircle", "quarter_circle", "full_circle", "haar_circle",
 * "inverse_semicircle", "marchenko_pastur" (params: beta),
 * "ginibre_product" (params: L), "point_mass" (params: location),
 * "binary" (no params), "two_point" (params: x1, p1, x2, p2) */
FL_API fl_status fl_law_create(const char* kind, const double* params,
                               int n_params, fl_law** out);
FL_API void fl_law_free(fl_law* law);

FL_API fl_status fl_law_density(const fl_law* law, double re, double im,
                                double* out);
FL_API fl_status fl_law_moment(const fl_law* law, int k, double* out);
FL_API fl_status fl_law_total_mass(const fl_law* law, double* out);
/* JSON descriptor {kind, parameters}; returns required length (excluding NUL)
 * through out_len; copies up to cap bytes into buf when buf is non-NULL. */
FL_API fl_status fl_law_descriptor(const fl_law* law, char* buf, size_t cap,
                                   size_t* out_len);

FL_API fl_status fl_catalan(int n, uint64_t* out);

/* ---- transforms --------------------------------------------------------- */

FL_API fl_status fl_stieltjes(const fl_law* law, double s_re, double s_im,
                              double* out_re, double* out_im);
FL_API fl_status fl_r_transform(const fl_law* law, double w_re, double w_im,
                                double* out_re, double* out_im);
FL_API fl_status fl_s_transform(const fl_law* law, double z_re, double z_im,
                                double* out_re, double* out_im);
FL_API fl_status fl_r_s_duality_residual(const fl_law* law, double z_re,
                                         double z_im, double* out);

/* densities on a caller grid via Stieltjes inversion of the law's transform */
FL_API fl_status fl_density_from_stieltjes(const fl_law* law, const double* grid,
                                           int n, double* out_density);

/* ---- free convolution --------------------------------------------------- */

/* op: "add", "mul", or "clt" (b ignored for clt; n_clt used only for clt) */
FL_API fl_status fl_convolve(const char* op, const fl_law* a, const fl_law* b,
                             int n_clt, const double* grid, int n,
                             double* out_density);

/* ---- detectors ---------------------------------------------------------- */

FL_API fl_status fl_sinr_asymptotic(double beta, double power, double sigma0_sq,
                                    double* out);
FL_API fl_status fl_tse_hanly_eta(double beta, double power, double sigma0_sq,
                                  double* out);
FL_API fl_status fl_pe_sinr(double beta, double power, double sigma0_sq,
                            int degree, double* out);
FL_API fl_status fl_bsc_capacity(double crossover, double* out);
FL_API fl_status fl_capacity_per_dim(const fl_law* law, double power,
                                     double sigma0_sq, double* out);

/* ---- replica ------------------------------------------------------------ */

typedef struct fl_replica_state {
    double E, F, m, q, p;
    double free_energy;
    double ber;
    int converged;
} fl_replica_state;

/* prior: "gaussian" or "binary". For binary all solutions are returned
 * (capacity permitting), ascending in E; n_out reports how many. */
FL_API fl_status fl_replica_solve(const char* prior, double beta, double sigma_sq,
                                  double sigma0_sq, fl_replica_state* out, int cap,
                                  int* n_out);

typedef struct fl_replica_sweep_row {
    double beta;
    int branch;
    double E;
    double ber;
    double free_energy;
    int selected;
} fl_replica_sweep_row;

/* matched binary sweep; rows has capacity cap, n_out reports rows written.
 * window/beta_star outputs are NAN when absent. */
FL_API fl_status fl_replica_sweep(double sigma0_sq, double beta_min,
                                  double beta_max, int steps,
                                  fl_replica_sweep_row* rows, int cap, int* n_out,
                                  double* window_lo, double* window_hi,
                                  double* beta_star);

/* ---- compressed sensing ------------------------------------------------- */

typedef struct fl_cs_state {
    double sigma_eff_sq;
    double gamma_p;
    double mse;
    double residual;
} fl_cs_state;

FL_API fl_status fl_cs_fixed_point(double beta, double sigma0_sq, double gamma,
                                   double rho, fl_cs_state* out, int cap,
                                   int* n_out);
FL_API fl_status fl_sparsity_bound(int n, int k, double* out);

/* ---- Monte Carlo lab ----------------------------------------------------- */

/* ensemble: "wigner" (square n), "iid" (n x k, singular_sq spectrum),
 * "haar" (phases), "circle" (complex eigenvalues, radial law),
 * "iid_pm1" (n x k, singular_sq). law may be NULL for "haar" (uniform
 * phases). Returns the KS distance of the sampled spectrum against the law. */
FL_API fl_status fl_mc_ks(const char* ensemble, const fl_law* law, int n, int k,
                          uint64_t seed, double* out_ks);

/* k-th moment of the sampled spectrum of the given ensemble */
FL_API fl_status fl_mc_moment(const char* ensemble, int n, int k, uint64_t seed,
                              int order, double* out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* FREELIM_C_H */
