#pragma once

#include "freelim/free_calc.hpp"
#include "freelim/spectra.hpp"

#include <Eigen/Dense>

#include <vector>

namespace freelim {

struct ChannelParams {
    double beta = 1.0;       // load K/N
    double power = 1.0;      // P, linear scale
    double sigma0_sq = 1.0;  // true noise variance
    SpectralLaw power_dist = SpectralLaw::point_mass(1.0);
};

// SINR of the linear MMSE detector for user k (0-based), computed from the
// direct matrix form; the eigenvalue form must agree to 1e-8 (matrix inversion
// lemma) and is cross-checked internally.
double mmse_sinr_finite(const Eigen::MatrixXd& h, int k, double power,
                        double sigma0_sq);

// Both algebraic routes, exposed for the identity test.
double mmse_sinr_direct(const Eigen::MatrixXd& h, int k, double power,
                        double sigma0_sq);
double mmse_sinr_eigenform(const Eigen::MatrixXd& h, int k, double power,
                           double sigma0_sq);

// Closed-form large-system limit for equal powers.
double mmse_sinr_asymptotic_equal_power(double beta, double power, double sigma0_sq);

// Unique positive fixed point of eta = 1/(sigma0^2 + beta int p dP/(1 + p eta)).
double tse_hanly_eta(const ChannelParams& params, const FixedPointConfig& cfg = {});

// Largest relaxation parameter with guaranteed convergence on the MMSE matrix:
// 2 / (sigma0^2 + P (1 + sqrt(beta))^2).
double gauss_seidel_alpha_bound(double beta, double power, double sigma0_sq);

// S_{i+1} = S_i + alpha (I - X S_i), truncated at iters. Detects divergence
// when the residual grows 10x above its best value.
Eigen::MatrixXd gauss_seidel_inverse(const Eigen::MatrixXd& x, double alpha,
                                     int iters);

// Polynomial-expansion detector weights from the Yule-Walker system built on
// spectral moments m_1..m_{2D+2}.
std::vector<double> pe_weights(const MomentSequence& moments, double sigma0_sq,
                               int degree);

// Same weights from the Gram matrix itself; moments and the solve run in
// extended precision. At degree K-1 the Hankel system's conditioning exceeds
// what double-rounded moments can carry, and this path restores the exact
// Cayley-Hamilton identity sum w_i R^i = (R + sigma0^2 I)^{-1}.
std::vector<double> pe_weights_from_gram(const Eigen::MatrixXd& gram,
                                         double sigma0_sq, int degree);

// Continued-fraction SINR recursion, D steps from SINR_0 = 0.
double pe_sinr_recursion(double beta, double power, double sigma0_sq, int degree);

// E_lambda log(1 + (P/sigma0^2) lambda) in nats over the given eigenvalue law.
double capacity_per_dim(const SpectralLaw& law, double power, double sigma0_sq);

// 1 + p log2 p + (1-p) log2 (1-p), bits.
double bsc_capacity(double crossover);

// Exact marginal-posterior-mode decisions by 2^K enumeration over {-1,+1}^K.
// Real-channel convention: posterior ~ exp(-||y - Hx||^2 / (2 sigma^2)) prior.
// prior_plus is the prior probability of +1 per component.
Eigen::VectorXd mpm_bruteforce(const Eigen::MatrixXd& h, const Eigen::VectorXd& y,
                               double sigma, double prior_plus = 0.5);

}  // namespace freelim
