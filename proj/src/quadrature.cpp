#include "gpi/quadrature.hpp"

#include "gpi/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>

namespace gpi::quadrature {

namespace {

// 15-point Kronrod abscissae (positive half) and weights, with the embedded
// 7-point Gauss weights.
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
};

struct Segment {
    double a = 0.0;
    double b = 0.0;
    double value = 0.0;
    double err = 0.0;

    bool operator<(const Segment& o) const { return err < o.err; }
};

Segment gk15(const std::function<double(double)>& f, double a, double b) {
    const double centr = 0.5 * (a + b);
    const double hlgth = 0.5 * (b - a);

    double fv1[7], fv2[7];
    const double fc = f(centr);
    double resg = fc * kWg[3];
    double resk = fc * kWgk[7];
    double resabs = std::abs(resk);
    for (int j = 0; j < 3; ++j) {
        const int jtw = 2 * j + 1;
        const double absc = hlgth * kXgk[jtw];
        fv1[jtw] = f(centr - absc);
        fv2[jtw] = f(centr + absc);
        const double fsum = fv1[jtw] + fv2[jtw];
        resg += kWg[j] * fsum;
        resk += kWgk[jtw] * fsum;
        resabs += kWgk[jtw] * (std::abs(fv1[jtw]) + std::abs(fv2[jtw]));
    }
    for (int j = 0; j < 4; ++j) {
        const int jtwm1 = 2 * j;
        const double absc = hlgth * kXgk[jtwm1];
        fv1[jtwm1] = f(centr - absc);
        fv2[jtwm1] = f(centr + absc);
        const double fsum = fv1[jtwm1] + fv2[jtwm1];
        resk += kWgk[jtwm1] * fsum;
        resabs += kWgk[jtwm1] * (std::abs(fv1[jtwm1]) + std::abs(fv2[jtwm1]));
    }

    const double reskh = resk * 0.5;
    double resasc = kWgk[7] * std::abs(fc - reskh);
    for (int j = 0; j < 7; ++j) {
        resasc += kWgk[j] * (std::abs(fv1[j] - reskh) + std::abs(fv2[j] - reskh));
    }

    Segment s;
    s.a = a;
    s.b = b;
    s.value = resk * hlgth;
    resabs *= std::abs(hlgth);
    resasc *= std::abs(hlgth);
    double abserr = std::abs((resk - resg) * hlgth);
    if (resasc != 0.0 && abserr != 0.0) {
        abserr = resasc * std::min(1.0, std::pow(200.0 * abserr / resasc, 1.5));
    }
    const double eps50 = 50.0 * std::numeric_limits<double>::epsilon();
    if (resabs > std::numeric_limits<double>::min() / eps50) {
        abserr = std::max(eps50 * resabs, abserr);
    }
    s.err = abserr;
    return s;
}

} // namespace

QuadResult integrate_gk(const std::function<double(double)>& f, double a,
                        double b, double abs_tol, double rel_tol,
                        int max_segments) {
    if (!(b > a)) throw DomainError("integrate_gk: requires b > a");
    if (!(abs_tol >= 0.0) || !(rel_tol >= 0.0)) {
        throw DomainError("integrate_gk: tolerances must be nonnegative");
    }

    std::priority_queue<Segment> queue;
    queue.push(gk15(f, a, b));
    int evals = 15;
    int segments = 1;

    auto totals = [&queue]() {
        // The queue never holds more than max_segments entries; draining a
        // copy keeps the bookkeeping simple and exact.
        std::priority_queue<Segment> copy = queue;
        double v = 0.0, e = 0.0;
        while (!copy.empty()) {
            v += copy.top().value;
            e += copy.top().err;
            copy.pop();
        }
        return std::pair<double, double>{v, e};
    };

    double total_value = queue.top().value;
    double total_err = queue.top().err;
    while (total_err > std::max(abs_tol, rel_tol * std::abs(total_value))) {
        if (segments >= max_segments) {
            std::ostringstream os;
            os << "integrate_gk: did not reach tolerance after "
               << max_segments << " segments; value " << total_value
               << ", error estimate " << total_err;
            throw NumericError(os.str());
        }
        Segment worst = queue.top();
        queue.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            std::ostringstream os;
            os << "integrate_gk: segment [" << worst.a << ", " << worst.b
               << "] collapsed without converging (error " << worst.err << ")";
            throw NumericError(os.str());
        }
        queue.push(gk15(f, worst.a, mid));
        queue.push(gk15(f, mid, worst.b));
        evals += 30;
        ++segments;
        const auto [v, e] = totals();
        total_value = v;
        total_err = e;
    }
    return {total_value, total_err, evals};
}

JacobiRule gauss_jacobi(int n, double a, double b) {
    if (n < 1) throw DomainError("gauss_jacobi: need at least one node");
    if (!(a > -1.0) || !(b > -1.0)) {
        throw DomainError("gauss_jacobi: weight exponents must be > -1");
    }

    // Three-term recurrence for monic Jacobi polynomials.
    std::vector<double> d(n), e(n, 0.0);
    const double apb = a + b;
    d[0] = (b - a) / (apb + 2.0);
    for (int k = 1; k < n; ++k) {
        const double den = (2.0 * k + apb) * (2.0 * k + apb + 2.0);
        d[k] = (b * b - a * a) / den;
    }
    // beta_0 is the total weight mass 2^(a+b+1) B(a+1, b+1).
    const double beta0 =
        std::exp((apb + 1.0) * std::log(2.0) + specfun::log_gamma(a + 1.0) +
                 specfun::log_gamma(b + 1.0) - specfun::log_gamma(apb + 2.0));
    std::vector<double> beta(n, 0.0);
    if (n > 1) {
        beta[1] = 4.0 * (1.0 + a) * (1.0 + b) /
                  ((apb + 2.0) * (apb + 2.0) * (apb + 3.0));
        for (int k = 2; k < n; ++k) {
            const double t = 2.0 * k + apb;
            beta[k] = 4.0 * k * (k + a) * (k + b) * (k + apb) /
                      (t * t * (t + 1.0) * (t - 1.0));
        }
    }
    for (int k = 1; k < n; ++k) e[k - 1] = std::sqrt(beta[k]);

    // Implicit-shift QL on the symmetric tridiagonal matrix, tracking only
    // the first row of the eigenvector matrix (imtql2 specialization).
    std::vector<double> z(n, 0.0);
    z[0] = 1.0;
    const double eps = std::numeric_limits<double>::epsilon();
    for (int l = 0; l < n; ++l) {
        for (int iter = 0;; ++iter) {
            int m = l;
            while (m < n - 1 &&
                   std::abs(e[m]) > eps * (std::abs(d[m]) + std::abs(d[m + 1]))) {
                ++m;
            }
            if (m == l) break;
            if (iter >= 50) {
                throw NumericError(
                    "gauss_jacobi: eigenvalue iteration failed to converge");
            }
            double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            double r = std::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
            double s = 1.0, c = 1.0, p = 0.0;
            bool underflowed = false;
            for (int i = m - 1; i >= l; --i) {
                double f = s * e[i];
                const double bb = c * e[i];
                r = std::hypot(f, g);
                e[i + 1] = r;
                if (r == 0.0) {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflowed = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * bb;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - bb;
                f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if (!underflowed) {
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        }
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&d](int i, int j) { return d[i] < d[j]; });

    JacobiRule rule;
    rule.n = n;
    rule.a = a;
    rule.b = b;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = d[order[i]];
        rule.weights[i] = beta0 * z[order[i]] * z[order[i]];
    }
    return rule;
}

} // namespace gpi::quadrature
