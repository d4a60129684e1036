#pragma once

// Mixed absolute moments E[prod_j |X_j|^{alpha_j}] of a centered Gaussian
// vector, computed by independent methods: closed forms (1-D, bivariate
// hypergeometric, even-moment pairing recursion), deterministic quadrature
// of the Gamma-integral reductions, and Monte Carlo.

#include "gpi/errors.hpp"
#include "gpi/linalg.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gpi::moments {

using linalg::CorrelationMatrix;
using linalg::SymMatrix;
using linalg::Vec;

enum class Method { closed, nabeya, isserlis, quadrature, monte_carlo };

const char* method_name(Method m);

// Signed exponent list; entries must be > -1 for the moment to exist.
class ExponentVector {
public:
    static ExponentVector from_list(const std::vector<double>& alphas);

    const std::vector<double>& alphas() const { return alphas_; }
    int size() const { return static_cast<int>(alphas_.size()); }
    double operator[](int i) const { return alphas_[i]; }

    // Indices with alpha in (-1, 0).
    const std::vector<int>& negative() const { return negative_; }
    // Indices whose alpha is a positive even integer (within 1e-9).
    const std::vector<int>& even() const { return even_; }
    // Indices with alpha > 0 that are not even integers.
    const std::vector<int>& general_positive() const { return general_positive_; }
    // True when every entry is a nonnegative even integer.
    bool all_even() const;

private:
    std::vector<double> alphas_;
    std::vector<int> negative_;
    std::vector<int> even_;
    std::vector<int> general_positive_;
};

struct TiltedGaussian {
    CorrelationMatrix base;
    Vec tilt;
    SymMatrix cov;       // (Sigma^{-1} + 2T)^{-1}
    Vec var_diag;        // diagonal of cov
    SymMatrix rho_t;     // correlations of cov
};

struct MomentEstimate {
    double value = 0.0;
    Method method = Method::closed;
    double err = 0.0;  // absolute tolerance, or MC standard error
    std::optional<long long> samples;
    std::optional<unsigned long long> seed;
    bool err_reliable = true;
};

// E|X|^alpha for X ~ N(0, variance): (2 variance)^{alpha/2}
// Gamma((alpha+1)/2) / sqrt(pi). Requires alpha > -1 (else infinite).
double abs_moment_1d(double alpha, double variance);

// E[|Y2|^{a2} |Y3|^{a3}] for a centered bivariate Gaussian: product of the
// 1-D moments times 2F1(-a2/2, -a3/2; 1/2; rho^2).
double nabeya_bivariate(double a2, double a3, double var2, double var3,
                        double rho);

// E[prod_i X_i^{2 m_i}] via the pairing recursion
// E[x_a P] = sum_b sigma_ab E[dP/dx_b], memoized over degree vectors.
// Capability cap: sum m_i <= 8.
double isserlis_even_moment(const SymMatrix& sigma, const std::vector<int>& m);

// Exponentially tilted Gaussian: covariance (Sigma^{-1} + 2T)^{-1} for a
// nonnegative diagonal tilt T.
TiltedGaussian tilted(const CorrelationMatrix& sigma, const Vec& tilt);

// Closed form for the last diagonal entry of the tilted covariance when the
// last axis is untilted: Var(Y_n) = [1 + 2 t'(T1^{-1} + 2(S1 - t t'))^{-1} t]^{-1},
// where sigma is partitioned [[S1, t], [t', 1]] and t1 holds the (strictly
// positive) tilts of the first n-1 axes. Always in (0, 1].
double tilted_var_last(const CorrelationMatrix& sigma, const Vec& t1);

// E[|X1|^{-alpha1} prod_{i>=2} |X_i|^{alpha_i}] with alpha1 in (0, 1) given
// as the magnitude of the negated exponent. The positive part must be all
// even integers (any n), or general positive with n <= 3, or empty (n = 1).
MomentEstimate mixed_moment_one_negative(const CorrelationMatrix& sigma,
                                         double alpha1,
                                         const std::vector<double>& rest);

// E[prod_{i<=k} |X_i|^{-alpha_i} (|X_n|^{alpha_n})] with k negative-exponent
// magnitudes in (0, 1) on the leading axes and an optional single positive
// exponent on the last axis. Tensorized Gauss-Jacobi quadrature; k <= 3.
MomentEstimate mixed_moment_multi_negative(const CorrelationMatrix& sigma,
                                           const std::vector<double>& neg,
                                           std::optional<double> pos_last);

// Plain Monte Carlo with a private deterministic generator. The standard
// error is flagged unreliable unless every alpha > -1/2.
MomentEstimate mc_mixed_moment(const SymMatrix& sigma,
                               const ExponentVector& alphas,
                               long long n_samples, unsigned long long seed);

} // namespace gpi::moments
