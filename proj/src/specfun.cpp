#include "gpi/specfun.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace gpi::specfun {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;
constexpr double kLnPi = 1.14472988584940017414342735135305871;
constexpr double kHalfLn2Pi = 0.91893853320467274178032973640561764;

// Lanczos approximation, g = 607/128, 15 coefficients.
constexpr double kLanczosG = 4.7421875;
constexpr double kLanczos[15] = {
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
};

// sin(pi x) with argument reduction done on x, not on pi*x.
double sin_pi(double x) {
    double r = std::fmod(x, 2.0);
    if (r < 0.0) r += 2.0;
    // r in [0, 2); fold into [0, 1/2] where sin is evaluated directly.
    if (r < 0.5) return std::sin(kPi * r);
    if (r < 1.0) return std::sin(kPi * (1.0 - r));
    if (r < 1.5) return -std::sin(kPi * (r - 1.0));
    return -std::sin(kPi * (2.0 - r));
}

double lanczos_sum(double x) {
    double s = kLanczos[0];
    for (int k = 1; k < 15; ++k) {
        s += kLanczos[k] / (x - 1.0 + k);
    }
    return s;
}

double log_gamma_positive(double x) {
    if (x < 0.5) {
        // Reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x).
        return kLnPi - std::log(sin_pi(x)) - log_gamma_positive(1.0 - x);
    }
    const double t = x + kLanczosG - 0.5;
    return kHalfLn2Pi + (x - 0.5) * std::log(t) - t + std::log(lanczos_sum(x));
}

std::string format_params(double a, double b, double c, double z) {
    std::ostringstream os;
    os << "a=" << a << ", b=" << b << ", c=" << c << ", z=" << z;
    return os.str();
}

} // namespace

double log_gamma(double x) {
    if (!std::isfinite(x) || x <= 0.0) {
        std::ostringstream os;
        os << "log_gamma requires finite x > 0, got x=" << x;
        throw DomainError(os.str());
    }
    return log_gamma_positive(x);
}

double pochhammer(double alpha, int n) {
    if (n < 0) {
        throw DomainError("pochhammer requires n >= 0");
    }
    double p = 1.0;
    for (int k = 0; k < n; ++k) {
        p *= alpha + k;
    }
    return p;
}

namespace detail {

bool is_nonpositive_integer(double x, double tol) {
    if (x > tol) return false;
    const double r = std::round(x);
    return r <= 0.0 && std::abs(x - r) <= tol;
}

double log_gamma_signed(double x, int& sign) {
    if (!std::isfinite(x)) {
        throw DomainError("log_gamma_signed requires finite x");
    }
    if (x > 0.0) {
        sign = 1;
        return log_gamma_positive(x);
    }
    if (is_nonpositive_integer(x, 0.0)) {
        std::ostringstream os;
        os << "gamma pole at x=" << x;
        throw DomainError(os.str());
    }
    // Gamma(x) = pi / (sin(pi x) Gamma(1-x)) for non-integer x < 0.
    const double s = sin_pi(x);
    sign = (s > 0.0) ? 1 : -1;
    return kLnPi - std::log(std::abs(s)) - log_gamma_positive(1.0 - x);
}

double terminating_2f1(double a, double b, double c, double z, int m) {
    // Sum_{k=0}^{m} (a)_k (b)_k / (c)_k z^k / k!, exact in m+1 terms.
    double sum = 1.0;
    double term = 1.0;
    for (int k = 0; k < m; ++k) {
        term *= (a + k) * (b + k) / ((c + k) * (k + 1)) * z;
        sum += term;
    }
    return sum;
}

double series_2f1(double a, double b, double c, double z) {
    constexpr int kMaxTerms = 10000;
    constexpr double kRelTol = 1e-16;
    double sum = 1.0;
    double term = 1.0;
    int small_streak = 0;
    for (int k = 0; k < kMaxTerms; ++k) {
        term *= (a + k) * (b + k) / ((c + k) * (k + 1)) * z;
        sum += term;
        if (std::abs(term) <= kRelTol * std::abs(sum)) {
            if (++small_streak >= 2) return sum;
        } else {
            small_streak = 0;
        }
    }
    std::ostringstream os;
    os << "2F1 series did not converge in " << kMaxTerms << " terms for "
       << format_params(a, b, c, z) << "; partial sum " << sum
       << ", last term " << term;
    throw NumericError(os.str());
}

double euler_2f1(double a, double b, double c, double z) {
    // (1-z)^(c-a-b) 2F1(c-a, c-b; c; z); same z but transformed parameters
    // give a series that converges fast for the exponent shapes used here.
    return std::pow(1.0 - z, c - a - b) * series_2f1(c - a, c - b, c, z);
}

double near_one_2f1(double a, double b, double c, double z) {
    const double w = 1.0 - z;
    const double s = c - a - b;
    // Both Gamma ratios via signed log-gamma so negative arguments are fine.
    int sg_num1 = 1, sg_ca = 1, sg_cb = 1;
    const double lg_c = log_gamma_positive(c);
    const double lg_s = log_gamma_signed(s, sg_num1);
    const double lg_ca = log_gamma_signed(c - a, sg_ca);
    const double lg_cb = log_gamma_signed(c - b, sg_cb);
    const double t1 = sg_num1 * sg_ca * sg_cb *
                      std::exp(lg_c + lg_s - lg_ca - lg_cb) *
                      series_2f1(a, b, 1.0 - s, w);

    // Second term vanishes when Gamma(a) or Gamma(b) has a pole.
    double t2 = 0.0;
    if (!is_nonpositive_integer(a) && !is_nonpositive_integer(b)) {
        int sg_ms = 1, sg_a = 1, sg_b = 1;
        const double lg_ms = log_gamma_signed(-s, sg_ms);
        const double lg_a = log_gamma_signed(a, sg_a);
        const double lg_b = log_gamma_signed(b, sg_b);
        t2 = sg_ms * sg_a * sg_b * std::pow(w, s) *
             std::exp(lg_c + lg_ms - lg_a - lg_b) *
             series_2f1(c - a, c - b, 1.0 + s, w);
    }
    return t1 + t2;
}

} // namespace detail

double gauss_2f1_at_one(double a, double b, double c) {
    const double s = c - a - b;
    if (detail::is_nonpositive_integer(c)) {
        throw DomainError("2F1 undefined: c is a non-positive integer, " +
                          format_params(a, b, c, 1.0));
    }
    if (s <= 0.0) {
        throw DomainError("2F1 at z=1 requires c-a-b > 0, got c-a-b=" +
                          std::to_string(s));
    }
    // Gamma poles in the denominator kill the whole expression.
    if (detail::is_nonpositive_integer(c - a) ||
        detail::is_nonpositive_integer(c - b)) {
        return 0.0;
    }
    int sg_ca = 1, sg_cb = 1;
    const double lg_ca = detail::log_gamma_signed(c - a, sg_ca);
    const double lg_cb = detail::log_gamma_signed(c - b, sg_cb);
    return sg_ca * sg_cb *
           std::exp(log_gamma(c) + log_gamma(s) - lg_ca - lg_cb);
}

double gauss_2f1(const HyperParams& p) {
    const double a = p.a, b = p.b, c = p.c, z = p.z;
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c) ||
        !std::isfinite(z)) {
        throw DomainError("2F1 requires finite parameters, " +
                          format_params(a, b, c, z));
    }
    if (detail::is_nonpositive_integer(c)) {
        throw DomainError("2F1 undefined: c is a non-positive integer, " +
                          format_params(a, b, c, z));
    }
    if (z > 1.0) {
        throw DomainError("2F1 implemented for z <= 1 only, " +
                          format_params(a, b, c, z));
    }
    if (z == 0.0) return 1.0;

    // Terminating cases are polynomials; evaluate exactly for any z.
    if (detail::is_nonpositive_integer(a)) {
        return detail::terminating_2f1(a, b, c, z,
                                       static_cast<int>(-std::round(a)));
    }
    if (detail::is_nonpositive_integer(b)) {
        return detail::terminating_2f1(b, a, c, z,
                                       static_cast<int>(-std::round(b)));
    }
    if (z == 1.0) return gauss_2f1_at_one(a, b, c);
    if (z < -1.0) {
        throw DomainError("2F1 implemented for z in [-1, 1] only, " +
                          format_params(a, b, c, z));
    }
    if (std::abs(z) <= 0.5) return detail::series_2f1(a, b, c, z);
    if (z < 0.99) return detail::euler_2f1(a, b, c, z);

    // z in [0.99, 1): powers of 1-z unless c-a-b is too close to an integer
    // for the connection formula's gamma factors.
    const double s = c - a - b;
    if (std::abs(s - std::round(s)) > 1e-5) {
        return detail::near_one_2f1(a, b, c, z);
    }
    return detail::euler_2f1(a, b, c, z);
}

double d_gauss_2f1_dz(const HyperParams& p) {
    HyperParams q{p.a + 1.0, p.b + 1.0, p.c + 1.0, p.z};
    return (p.a * p.b / p.c) * gauss_2f1(q);
}

} // namespace gpi::specfun
