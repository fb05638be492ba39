#include "freelim/mc_lab.hpp"

#include "freelim/errors.hpp"
#include "freelim/rng.hpp"

#define LAPACK_COMPLEX_CUSTOM
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <complex>
#include <cblas.h>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace freelim {

namespace {
constexpr double kPi = std::numbers::pi;

void check_dims(int n, int k) {
    if (n < 1 || k < 1) throw std::domain_error("EnsembleSpec: dimensions must be >= 1");
    if (static_cast<long long>(n) * k > 64LL * 1024 * 1024)
        throw std::domain_error("EnsembleSpec: dimension overflow guard");
}
}  // namespace

EnsembleSpec EnsembleSpec::iid_gaussian(int n, int k, std::uint64_t seed,
                                        bool complex_field) {
    check_dims(n, k);
    EnsembleSpec s;
    s.kind = Kind::iid_gaussian;
    s.rows = n;
    s.cols = k;
    s.seed = seed;
    s.complex_field = complex_field;
    return s;
}

EnsembleSpec EnsembleSpec::iid_pm1(int n, int k, std::uint64_t seed) {
    check_dims(n, k);
    EnsembleSpec s;
    s.kind = Kind::iid_pm1;
    s.rows = n;
    s.cols = k;
    s.seed = seed;
    s.complex_field = false;
    return s;
}

EnsembleSpec EnsembleSpec::wigner_sym(int n, std::uint64_t seed) {
    check_dims(n, n);
    EnsembleSpec s;
    s.kind = Kind::wigner_sym;
    s.rows = s.cols = n;
    s.seed = seed;
    return s;
}

EnsembleSpec EnsembleSpec::haar_unitary(int n, std::uint64_t seed) {
    check_dims(n, n);
    EnsembleSpec s;
    s.kind = Kind::haar_unitary;
    s.rows = s.cols = n;
    s.seed = seed;
    return s;
}

EnsembleSpec EnsembleSpec::variance_profile(int n, int k,
                                            std::function<double(double, double)> w,
                                            std::uint64_t seed) {
    check_dims(n, k);
    EnsembleSpec s;
    s.kind = Kind::variance_profile;
    s.rows = n;
    s.cols = k;
    s.profile = std::move(w);
    s.seed = seed;
    return s;
}

EnsembleSpec EnsembleSpec::product_chain(std::vector<int> dims, std::uint64_t seed) {
    if (dims.size() < 2) throw std::domain_error("product_chain: need K_0..K_N");
    for (int d : dims) check_dims(d, 1);
    EnsembleSpec s;
    s.kind = Kind::product_chain;
    s.rows = dims.back();
    s.cols = dims.front();
    s.chain_dims = std::move(dims);
    s.seed = seed;
    return s;
}

EnsembleSpec EnsembleSpec::block_gaussian(int a, int b, int n, std::vector<double> tau,
                                          std::uint64_t seed) {
    check_dims(a * n, b * n);
    if (static_cast<int>(tau.size()) != a * b * a * b)
        throw std::invalid_argument("block_gaussian: tau must have a*b*a*b entries");
    EnsembleSpec s;
    s.kind = Kind::block_gaussian;
    s.rows = a * n;
    s.cols = b * n;
    s.block_a = a;
    s.block_b = b;
    s.block_n = n;
    s.tau = std::move(tau);
    s.seed = seed;
    return s;
}

namespace {

Eigen::MatrixXcd iid_matrix(int n, int k, bool complex_field, Philox& rng,
                            double row_dim_for_variance) {
    Eigen::MatrixXcd m(n, k);
    double scale = 1.0 / std::sqrt(row_dim_for_variance);
    // column-major fill order, fixed for reproducibility
    for (int j = 0; j < k; ++j)
        for (int i = 0; i < n; ++i)
            m(i, j) = complex_field ? scale * rng.cnormal()
                                    : std::complex<double>(scale * rng.normal(), 0.0);
    return m;
}

// BLAS-backed products and LAPACK eigensolves: the N = 2000 Monte Carlo
// acceptance runs live on these.
Eigen::MatrixXcd zgemm(const Eigen::MatrixXcd& a, bool adj_a,
                       const Eigen::MatrixXcd& b, bool adj_b) {
    int m = static_cast<int>(adj_a ? a.cols() : a.rows());
    int k = static_cast<int>(adj_a ? a.rows() : a.cols());
    int n = static_cast<int>(adj_b ? b.rows() : b.cols());
    Eigen::MatrixXcd c(m, n);
    const std::complex<double> one(1.0, 0.0), zero(0.0, 0.0);
    cblas_zgemm(CblasColMajor, adj_a ? CblasConjTrans : CblasNoTrans,
                adj_b ? CblasConjTrans : CblasNoTrans, m, n, k, &one, a.data(),
                static_cast<int>(a.rows()), b.data(), static_cast<int>(b.rows()),
                &zero, c.data(), m);
    return c;
}

// Full Hermitian eigendecomposition (ascending) via zheevd.
void zheevd_full(Eigen::MatrixXcd& a_inout_vectors, Eigen::VectorXd& evals) {
    int n = static_cast<int>(a_inout_vectors.rows());
    evals.resize(n);
    int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                              a_inout_vectors.data(), n, evals.data());
    if (info != 0)
        throw std::runtime_error("zheev failed with info=" + std::to_string(info));
}

std::vector<double> hermitian_eigenvalues(const Eigen::MatrixXcd& m) {
    int n = static_cast<int>(m.rows());
    std::vector<double> w(static_cast<std::size_t>(n));
    if (m.imag().cwiseAbs().maxCoeff() == 0.0) {
        Eigen::MatrixXd a = m.real();
        int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'L', n, a.data(), n, w.data());
        if (info != 0)
            throw std::runtime_error("dsyevd failed with info=" + std::to_string(info));
    } else {
        Eigen::MatrixXcd a = m;
        int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'N', 'L', n, a.data(), n, w.data());
        if (info != 0)
            throw std::runtime_error("zheevd failed with info=" + std::to_string(info));
    }
    return w;
}

Eigen::MatrixXcd haar_from_gaussian(const Eigen::MatrixXcd& h) {
    // T = H (H'H)^{-1/2} built exactly through the eigendecomposition
    Eigen::MatrixXcd vec = zgemm(h, true, h, false);  // H'H
    Eigen::VectorXd evals;
    zheevd_full(vec, evals);
    Eigen::MatrixXcd scaled =
        vec * evals.cwiseMax(0.0).cwiseSqrt().cwiseInverse().asDiagonal();
    Eigen::MatrixXcd inv_sqrt = zgemm(scaled, false, vec, true);
    return zgemm(h, false, inv_sqrt, false);
}

}  // namespace

Eigen::MatrixXcd sample(const EnsembleSpec& spec) {
    Philox rng(spec.seed, static_cast<std::uint64_t>(spec.kind));
    switch (spec.kind) {
        case EnsembleSpec::Kind::iid_gaussian:
            return iid_matrix(spec.rows, spec.cols, spec.complex_field, rng, spec.rows);
        case EnsembleSpec::Kind::iid_pm1: {
            Eigen::MatrixXcd m(spec.rows, spec.cols);
            double scale = 1.0 / std::sqrt(static_cast<double>(spec.rows));
            for (int j = 0; j < spec.cols; ++j)
                for (int i = 0; i < spec.rows; ++i)
                    m(i, j) = (rng.uniform() < 0.5 ? -scale : scale);
            return m;
        }
        case EnsembleSpec::Kind::wigner_sym: {
            Eigen::MatrixXcd h =
                iid_matrix(spec.rows, spec.rows, spec.complex_field, rng, spec.rows);
            return (h + h.adjoint()) / std::numbers::sqrt2;
        }
        case EnsembleSpec::Kind::haar_unitary: {
            Eigen::MatrixXcd h = iid_matrix(spec.rows, spec.rows, true, rng, spec.rows);
            return haar_from_gaussian(h);
        }
        case EnsembleSpec::Kind::variance_profile: {
            Eigen::MatrixXcd m(spec.rows, spec.cols);
            double n = spec.rows;
            for (int j = 0; j < spec.cols; ++j)
                for (int i = 0; i < spec.rows; ++i) {
                    double w = spec.profile(i / n, j / n);
                    if (w < 0.0)
                        throw std::domain_error("variance_profile: negative variance");
                    double scale = std::sqrt(w / n);
                    m(i, j) = spec.complex_field
                                  ? scale * rng.cnormal()
                                  : std::complex<double>(scale * rng.normal(), 0.0);
                }
            return m;
        }
        case EnsembleSpec::Kind::product_chain: {
            Eigen::MatrixXcd acc;
            for (std::size_t step = 1; step < spec.chain_dims.size(); ++step) {
                int kn = spec.chain_dims[step];
                int km = spec.chain_dims[step - 1];
                Eigen::MatrixXcd m = iid_matrix(kn, km, true, rng, kn);
                acc = (step == 1) ? m : Eigen::MatrixXcd(m * acc);
            }
            return acc;
        }
        case EnsembleSpec::Kind::block_gaussian: {
            const int a = spec.block_a, b = spec.block_b, n = spec.block_n;
            const int ab = a * b;
            // factor tau (PSD over composite (i,k) indices) as L L^T
            Eigen::MatrixXd cov(ab, ab);
            for (int i = 0; i < a; ++i)
                for (int k = 0; k < b; ++k)
                    for (int j = 0; j < a; ++j)
                        for (int l = 0; l < b; ++l)
                            cov(i * b + k, j * b + l) =
                                spec.tau[static_cast<std::size_t>(((i * b + k) * a + j) * b +
                                                                  l)];
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
            if (es.eigenvalues().minCoeff() < -1e-9)
                throw std::domain_error("block_gaussian: tau is not PSD");
            Eigen::MatrixXd L = es.eigenvectors() *
                                es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
            // independent standard blocks, mixed by L
            std::vector<Eigen::MatrixXcd> g(static_cast<std::size_t>(ab));
            double scale = 1.0 / std::sqrt(static_cast<double>((a + b) * n));
            for (int m = 0; m < ab; ++m) {
                g[static_cast<std::size_t>(m)].resize(n, n);
                for (int q = 0; q < n; ++q)
                    for (int r = 0; r < n; ++r)
                        g[static_cast<std::size_t>(m)](r, q) = scale * rng.cnormal();
            }
            Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(a * n, b * n);
            for (int i = 0; i < a; ++i)
                for (int k = 0; k < b; ++k) {
                    Eigen::MatrixXcd block = Eigen::MatrixXcd::Zero(n, n);
                    for (int m = 0; m < ab; ++m)
                        if (L(i * b + k, m) != 0.0)
                            block += L(i * b + k, m) * g[static_cast<std::size_t>(m)];
                    h.block(i * n, k * n, n, n) = block;
                }
            return h;
        }
    }
    throw std::logic_error("sample: unknown ensemble kind");
}

namespace {

std::vector<std::complex<double>> zgeev_eigenvalues(const Eigen::MatrixXcd& m) {
    int n = static_cast<int>(m.rows());
    std::vector<lapack_complex_double> a(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(j) * n + i] = m(i, j);
    std::vector<lapack_complex_double> w(static_cast<std::size_t>(n));
    int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'N', n, a.data(), n, w.data(),
                             nullptr, 1, nullptr, 1);
    if (info != 0)
        throw std::runtime_error("zgeev failed with info=" + std::to_string(info));
    return std::vector<std::complex<double>>(w.begin(), w.end());
}

}  // namespace

EmpiricalSpectrum spectrum(const Eigen::MatrixXcd& m, SpectrumMode mode) {
    EmpiricalSpectrum emp;
    switch (mode) {
        case SpectrumMode::eig_hermitian: {
            if (m.rows() != m.cols())
                throw std::invalid_argument("spectrum: eig_hermitian needs square input");
            emp.values = hermitian_eigenvalues(m);
            break;
        }
        case SpectrumMode::singular_sq: {
            Eigen::MatrixXcd hh;
            if (m.imag().cwiseAbs().maxCoeff() == 0.0) {
                Eigen::MatrixXd hr = m.real();
                hh = (hr * hr.transpose()).cast<std::complex<double>>();
            } else {
                hh = zgemm(m, false, m, true);
            }
            emp.values = hermitian_eigenvalues(hh);
            break;
        }
        case SpectrumMode::eig_complex: {
            if (m.rows() != m.cols())
                throw std::invalid_argument("spectrum: eig_complex needs square input");
            emp.cvalues = zgeev_eigenvalues(m);
            emp.is_complex = true;
            break;
        }
    }
    std::sort(emp.values.begin(), emp.values.end());
    emp.n = static_cast<int>(emp.is_complex ? emp.cvalues.size() : emp.values.size());
    return emp;
}

double ks_distance(const EmpiricalSpectrum& emp, const SpectralLaw& law) {
    if (emp.is_complex)
        throw unsupported_error("ks_distance: planar spectrum, use radial_ks");
    if (law.planar()) throw unsupported_error("ks_distance: planar law, use radial_ks");
    double n = emp.values.size();
    double ks = 0.0;
    // Tied eigenvalues (atoms, numerically-zero clusters) jump together; the
    // lower comparison uses the law's left limit so an atom is not counted
    // against the empirical CDF just below it.
    std::size_t i = 0;
    while (i < emp.values.size()) {
        double x = emp.values[i];
        double tol = 1e-9 * std::max(1.0, std::abs(x));
        std::size_t j = i;
        while (j + 1 < emp.values.size() && emp.values[j + 1] - x <= tol) ++j;
        double f_right = law.cdf(x + tol);
        double f_left = law.cdf(x - tol);
        ks = std::max(ks, std::abs((j + 1) / n - f_right));
        ks = std::max(ks, std::abs(i / n - f_left));
        i = j + 1;
    }
    return ks;
}

double radial_ks(const EmpiricalSpectrum& emp, const SpectralLaw& law) {
    if (!law.planar()) throw unsupported_error("radial_ks: law is not planar");
    std::vector<double> r;
    if (emp.is_complex) {
        r.reserve(emp.cvalues.size());
        for (auto z : emp.cvalues) r.push_back(std::abs(z));
    } else {
        r = emp.values;
    }
    std::sort(r.begin(), r.end());
    double n = r.size();
    double ks = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        double f = law.radial_cdf(r[i]);
        ks = std::max(ks, std::abs((i + 1) / n - f));
        ks = std::max(ks, std::abs(i / n - f));
    }
    return ks;
}

double phase_ks(const EmpiricalSpectrum& emp) {
    if (!emp.is_complex) throw unsupported_error("phase_ks: need complex spectrum");
    std::vector<double> ph;
    ph.reserve(emp.cvalues.size());
    for (auto z : emp.cvalues) {
        double a = std::arg(z);
        if (a < 0.0) a += 2.0 * kPi;
        ph.push_back(a);
    }
    std::sort(ph.begin(), ph.end());
    double n = ph.size();
    double ks = 0.0;
    for (std::size_t i = 0; i < ph.size(); ++i) {
        double f = ph[i] / (2.0 * kPi);
        ks = std::max(ks, std::abs((i + 1) / n - f));
        ks = std::max(ks, std::abs(i / n - f));
    }
    return ks;
}

double eigenvector_lln_deviation(int n, int k, const Eigen::VectorXd& x,
                                 std::uint64_t seed,
                                 const std::vector<double>& t_grid,
                                 const std::vector<double>& weights) {
    if (x.size() != k)
        throw std::invalid_argument("eigenvector_lln: x must have K components");
    if (std::abs(x.norm() - 1.0) > 1e-10)
        throw std::invalid_argument("eigenvector_lln: x must be unit norm");
    auto spec = EnsembleSpec::iid_gaussian(n, k, seed, /*complex_field=*/false);
    Eigen::MatrixXcd hc = sample(spec);
    if (hc.imag().cwiseAbs().maxCoeff() != 0.0)
        throw std::invalid_argument("eigenvector_lln: paper restricts to real matrices");
    Eigen::MatrixXd h = hc.real();
    Eigen::MatrixXd hth = h.transpose() * h;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hth);
    // rows of the paper's U are the eigenvectors; columns of Eigen's Q are, so
    // y = U x = Q^T x.
    Eigen::VectorXd y = es.eigenvectors().transpose() * x;

    double dev = 0.0;
    for (double t : t_grid) {
        int upto = static_cast<int>(std::ceil(t * k));
        upto = std::clamp(upto, 0, k);
        double acc = 0.0;
        double target;
        if (weights.empty()) {
            for (int i = 0; i < upto; ++i) acc += y(i) * y(i);
            target = t;
        } else {
            if (static_cast<int>(weights.size()) != k)
                throw std::invalid_argument("eigenvector_lln: weights must have K entries");
            double wsum = 0.0;
            for (int i = 0; i < upto; ++i) {
                acc += weights[static_cast<std::size_t>(i)] * y(i) * y(i);
                wsum += weights[static_cast<std::size_t>(i)];
            }
            target = wsum / k;
        }
        dev = std::max(dev, std::abs(acc - target));
    }
    return dev;
}

double empirical_moment(const EmpiricalSpectrum& emp, int k) {
    if (emp.is_complex) {
        double acc = 0.0;
        for (auto z : emp.cvalues) acc += std::pow(std::abs(z), k);
        return acc / static_cast<double>(emp.cvalues.size());
    }
    double acc = 0.0;
    for (double v : emp.values) acc += std::pow(v, k);
    return acc / static_cast<double>(emp.values.size());
}

}  // namespace freelim
