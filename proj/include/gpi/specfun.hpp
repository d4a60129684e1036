#pragma once

// Scalar special functions: log-gamma, Pochhammer symbols and the Gauss
// hypergeometric function 2F1 on the real interval z <= 1.

#include "gpi/errors.hpp"

namespace gpi::specfun {

struct HyperParams {
    double a = 0.0;
    double b = 0.0;
    double c = 1.0;
    double z = 0.0;
};

// Natural log of the gamma function for x > 0.
double log_gamma(double x);

// Rising factorial (alpha)_n = alpha (alpha+1) ... (alpha+n-1), with ()_0 = 1.
double pochhammer(double alpha, int n);

// 2F1(a, b; c; z) for z <= 1. The parameter c must not be a non-positive
// integer; at z = 1 convergence requires c - a - b > 0 unless the series
// terminates.
double gauss_2f1(const HyperParams& p);

// Closed Gauss value 2F1(a, b; c; 1) = Gamma(c) Gamma(c-a-b) /
// (Gamma(c-a) Gamma(c-b)), requiring c - a - b > 0.
double gauss_2f1_at_one(double a, double b, double c);

// d/dz 2F1(a, b; c; z) = (a b / c) 2F1(a+1, b+1; c+1; z).
double d_gauss_2f1_dz(const HyperParams& p);

namespace detail {

// Raw power series sum, |z| < 1 (also used by the z -> 1-z connection).
double series_2f1(double a, double b, double c, double z);

// (1-z)^(c-a-b) 2F1(c-a, c-b; c; z), used for z in (1/2, 1).
double euler_2f1(double a, double b, double c, double z);

// Connection formula in powers of 1-z, for z near 1 and c-a-b not an integer.
double near_one_2f1(double a, double b, double c, double z);

// Finite sum when a (or b) is the non-positive integer -m.
double terminating_2f1(double a, double b, double c, double z, int m);

bool is_nonpositive_integer(double x, double tol = 1e-12);

// log |Gamma(x)| for any real non-pole x; sign receives the sign of Gamma(x).
double log_gamma_signed(double x, int& sign);

} // namespace detail

} // namespace gpi::specfun
