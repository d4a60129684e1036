#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gpi/linalg.hpp"
#include "gpi/moments.hpp"

namespace gpi::bounds {

using linalg::CorrelationMatrix;
using moments::ExponentVector;
using moments::MomentEstimate;

// Inequality families. The names are the stable CLI vocabulary:
//   thm1_1             one negative exponent against squared coordinates,
//                      lower bound with per-axis (1 - rho^2) factors
//   thm1_2             n-1 negative exponents and one positive, upper bound
//                      by the joint negative moment times the last marginal
//   remark_eq2         as thm1_2 with the last exponent pinned to 1; upper
//                      bound from Cholesky diagonal scaling and marginals
//   prop1_3            n = 4, one negative plus three even exponents, lower
//                      bound with (1 - rho^2)^(alpha/2) factors
//   prop1_4            n = 3 sandwich, one negative and two positive; the
//                      upper factor is a hypergeometric constant
//   prop1_5            n = 3 sandwich, two negative and one positive, with
//                      scalar proof diagnostics
//   wei_a3             all-negative split inequality (product of group
//                      moments below the joint moment)
//   opposite_n2        bivariate, negative/positive pair, upper bound by the
//                      marginal product
//   gpi_n2             bivariate, both positive, lower bound by the marginal
//                      product
//   even_gpi_1_6       trivariate even exponents, lower bound by marginals
//   even_gpi_subset_1_7  even exponents, split lower bound; requires a
//                      nonnegative-entry correlation matrix
enum class Kind {
    thm1_1,
    thm1_2,
    remark_eq2,
    prop1_3,
    prop1_4,
    prop1_5,
    wei_a3,
    opposite_n2,
    gpi_n2,
    even_gpi_1_6,
    even_gpi_subset_1_7,
};

const char* kind_name(Kind k);
// Throws DomainError for an unrecognized name.
Kind kind_from_string(const std::string& name);
const std::vector<Kind>& all_kinds();

struct InequalityCase {
    Kind kind;
    CorrelationMatrix sigma;
    // Signed exponents, one per coordinate of sigma.
    ExponentVector alphas;
    // Factorization index for the split kinds (wei_a3, even_gpi_subset_1_7):
    // the first `split` coordinates form the left group.
    std::optional<int> split;
};

// Throws DomainError unless the case satisfies its kind's dimension,
// exponent-domain, split, and matrix-sign requirements.
void validate_case(const InequalityCase& c);

// Scalar diagnostics for the prop1_5 sandwich on [[1,a,b],[a,1,c],[b,c,1]].
// They certify the algebra behind the lower bound:
//   K            = 2b^2 + 2c^2 - 4abc, the curvature constant
//   I1           = 8c^2 - 8abc, the reduced first integrand coefficient
//   I2           = 8(ab - c)^2, the reduced second coefficient (>= 0)
//   discriminant = quadratic discriminant of the extremal-c equation;
//                  identically zero, evaluated here without simplification
//   g_limit      = (1 - a^2)/(2 det) - 1/2, the supremum of the tilt ratio
//   var_floor    = det / (1 - a^2), the conditional-variance floor in (0, 1]
struct Prop15Diagnostics {
    double K;
    double I1;
    double I2;
    double discriminant;
    double g_limit;
    double var_floor;
};

Prop15Diagnostics prop1_5_diagnostics(const CorrelationMatrix& sigma);
// The unexpanded discriminant at tilt parameter tau > 0 (zero for every tau).
double prop1_5_discriminant(double a, double b, double tau);

// The sharp upper factor of prop1_4: the value at z = 1 of the Gauss series
// with parameters (-a2/2, -a3/2; 1/2). Equals 1 iff a2*a3 = 0.
double prop1_4_upper_constant(double a2, double a3);

// Monte Carlo policy for `evaluate` and `estimate_moment`.
struct McOptions {
    long long samples = 200000;
    unsigned long long seed = 1;
    // Permit MC as a fallback when no deterministic method covers the shape.
    bool enabled = true;
    // Force the left-hand side onto MC even when a deterministic method
    // exists; bound sides stay deterministic.
    bool force = false;
};

// One evaluated inequality: the joint moment plus whichever closed or
// quadrature sides the kind defines. `side_err` is the absolute uncertainty
// attached to the computed sides (quadrature error, or 4 standard errors for
// an MC-computed side; closed forms carry a small roundoff allowance).
struct BoundEval {
    MomentEstimate lhs;
    std::optional<double> lower;
    std::optional<double> upper;
    double side_err = 0.0;
    std::optional<Prop15Diagnostics> diagnostics;
};

// Deterministic per-kind evaluators. Each validates the case, requires the
// matching kind, and throws CapabilityError when the shape exceeds the
// deterministic methods (use `evaluate` for MC fallback).
BoundEval thm1_1_bound(const InequalityCase& c);
BoundEval thm1_2_bound(const InequalityCase& c);
BoundEval remark_eq2_bound(const InequalityCase& c);
BoundEval prop1_3_bound(const InequalityCase& c);
BoundEval prop1_4_bounds(const InequalityCase& c);
BoundEval prop1_5_bounds(const InequalityCase& c);
BoundEval wei_a3_bound(const InequalityCase& c);
BoundEval opposite_n2_bound(const InequalityCase& c);
BoundEval gpi_n2_bound(const InequalityCase& c);
BoundEval even_gpi_bound(const InequalityCase& c);

// Joint absolute moment E[prod |X_i|^{alpha_i}] with automatic method
// selection: closed forms and quadrature first, MC fallback when `mc` is
// given and enabled. Zero exponents drop their coordinates. `salt`
// decorrelates MC seeds when several moments derive from one case seed.
MomentEstimate estimate_moment(const CorrelationMatrix& sigma,
                               const std::vector<double>& alphas,
                               const McOptions* mc = nullptr,
                               unsigned long long salt = 0);

// Validates, dispatches on kind, and applies the MC policy.
BoundEval evaluate(const InequalityCase& c, const McOptions& opt = {});

}  // namespace gpi::bounds
