#pragma once

// Quadrature backends for the moment reductions: an adaptive Gauss-Kronrod
// 7/15 integrator for 1-D integrals on finite intervals, and Gauss-Jacobi
// rules (via the Golub-Welsch eigenvalue method) whose weight absorbs the
// endpoint singularities of the tensorized integrands.

#include "gpi/errors.hpp"

#include <functional>
#include <vector>

namespace gpi::quadrature {

struct QuadResult {
    double value = 0.0;
    double err = 0.0;
    int evaluations = 0;
};

// Adaptive bisection with a 15-point Kronrod / 7-point Gauss pair per
// segment. Stops when the summed error estimate drops below
// max(abs_tol, rel_tol * |value|); throws NumericError when the segment
// budget is exhausted or a segment collapses without converging.
QuadResult integrate_gk(const std::function<double(double)>& f, double a,
                        double b, double abs_tol, double rel_tol,
                        int max_segments = 2000);

// n-point rule for the weight (1-x)^a (1+x)^b on [-1, 1], a, b > -1.
struct JacobiRule {
    int n = 0;
    double a = 0.0;
    double b = 0.0;
    std::vector<double> nodes;    // ascending in (-1, 1)
    std::vector<double> weights;  // positive, summing to the weight mass
};

JacobiRule gauss_jacobi(int n, double a, double b);

} // namespace gpi::quadrature
