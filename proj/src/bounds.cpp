#include "gpi/bounds.hpp"

#include <cmath>
#include <cstdint>
#include <sstream>

#include "gpi/errors.hpp"
#include "gpi/specfun.hpp"

namespace gpi::bounds {

namespace {

using linalg::SymMatrix;
using moments::Method;

// Roundoff allowance attached to closed-form values. Generous relative to
// double precision, negligible against the verifier's absolute tolerance.
constexpr double kClosedRel = 1e-12;
// Series-based closed forms (bivariate hypergeometric, pairing sums).
constexpr double kSeriesRel = 1e-11;

MomentEstimate closed_estimate(double value, Method method, double rel) {
    MomentEstimate e;
    e.value = value;
    e.method = method;
    e.err = rel * std::abs(value);
    return e;
}

CorrelationMatrix principal_block(const CorrelationMatrix& s, int lo, int hi) {
    SymMatrix out(hi - lo);
    for (int i = lo; i < hi; ++i) {
        for (int j = lo; j <= i; ++j) {
            out.set(i - lo, j - lo, s(i, j));
        }
    }
    return CorrelationMatrix(out);
}

CorrelationMatrix reordered(const CorrelationMatrix& s,
                            const std::vector<int>& order) {
    const int n = static_cast<int>(order.size());
    SymMatrix out(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            out.set(i, j, s(order[i], order[j]));
        }
    }
    return CorrelationMatrix(out);
}

unsigned long long salted_seed(unsigned long long seed,
                               unsigned long long salt) {
    return salt == 0 ? seed : seed ^ (0x9E3779B97F4A7C15ULL * salt);
}

// Deterministic method selection; throws CapabilityError when nothing
// covers the exponent pattern.
MomentEstimate deterministic_moment(const CorrelationMatrix& sigma,
                                    const ExponentVector& ev) {
    const int n = ev.size();
    if (n == 1) {
        return closed_estimate(moments::abs_moment_1d(ev[0], 1.0),
                               Method::closed, kClosedRel);
    }
    if (ev.negative().empty() && ev.all_even()) {
        std::vector<int> m(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            m[static_cast<size_t>(i)] =
                static_cast<int>(std::llround(ev[i])) / 2;
        }
        const double v = moments::isserlis_even_moment(sigma.sym(), m);
        return closed_estimate(v, Method::isserlis, kSeriesRel);
    }
    if (n == 2) {
        const double v =
            moments::nabeya_bivariate(ev[0], ev[1], 1.0, 1.0, sigma(0, 1));
        return closed_estimate(v, Method::nabeya, kSeriesRel);
    }
    const auto& neg = ev.negative();
    const int n_neg = static_cast<int>(neg.size());
    if (n_neg == 1) {
        std::vector<int> order{neg[0]};
        std::vector<double> rest;
        for (int i = 0; i < n; ++i) {
            if (i == neg[0]) continue;
            order.push_back(i);
            rest.push_back(ev[i]);
        }
        const CorrelationMatrix block =
            neg[0] == 0 ? sigma : reordered(sigma, order);
        return moments::mixed_moment_one_negative(block, -ev[neg[0]], rest);
    }
    if (n_neg >= 2) {
        std::vector<double> mags;
        mags.reserve(static_cast<size_t>(n_neg));
        for (int i : neg) mags.push_back(-ev[i]);
        if (n_neg == n) {
            return moments::mixed_moment_multi_negative(sigma, mags,
                                                        std::nullopt);
        }
        if (n_neg == n - 1) {
            int pos = -1;
            for (int i = 0; i < n; ++i) {
                if (ev[i] > 0.0) pos = i;
            }
            std::vector<int> order(neg.begin(), neg.end());
            order.push_back(pos);
            const CorrelationMatrix block =
                pos == n - 1 && neg[0] == 0 ? sigma : reordered(sigma, order);
            return moments::mixed_moment_multi_negative(block, mags, ev[pos]);
        }
    }
    std::ostringstream msg;
    msg << "no deterministic method for " << n_neg << " negative and "
        << (n - n_neg) << " positive exponents in dimension " << n
        << "; Monte Carlo is required";
    throw CapabilityError(msg.str());
}

// Left-hand side of a case, honoring the force-MC policy.
MomentEstimate lhs_moment(const InequalityCase& c, const McOptions* mc) {
    if (mc != nullptr && mc->force) {
        return moments::mc_mixed_moment(c.sigma.sym(), c.alphas, mc->samples,
                                        mc->seed);
    }
    try {
        return deterministic_moment(c.sigma, c.alphas);
    } catch (const CapabilityError&) {
        if (mc == nullptr || !mc->enabled) throw;
    }
    return moments::mc_mixed_moment(c.sigma.sym(), c.alphas, mc->samples,
                                    mc->seed);
}

// Absolute uncertainty contributed by a factor of a bound side: quadrature
// errors pass through, MC standard errors get the conservative 4x widening.
double side_allowance(const MomentEstimate& e) {
    return e.method == Method::monte_carlo ? 4.0 * e.err : e.err;
}

bool positive_even_int(double a, long long* half = nullptr) {
    const double r = std::llround(a);
    if (std::abs(a - r) > 1e-9) return false;
    const long long k = std::llround(a);
    if (k < 2 || k % 2 != 0) return false;
    if (half != nullptr) *half = k / 2;
    return true;
}

bool in_neg_unit(double a) { return a > -1.0 && a < 0.0; }

[[noreturn]] void reject(Kind k, const std::string& what) {
    throw DomainError(std::string(kind_name(k)) + ": " + what);
}

void require_no_split(const InequalityCase& c) {
    if (c.split.has_value()) {
        reject(c.kind, "split index applies only to wei_a3 and "
                       "even_gpi_subset_1_7");
    }
}

void require_split(const InequalityCase& c) {
    const int n = c.alphas.size();
    if (!c.split.has_value()) reject(c.kind, "split index is required");
    if (*c.split < 1 || *c.split > n - 1) {
        reject(c.kind, "split index must lie in [1, n-1]");
    }
}

void require_kind(const InequalityCase& c, Kind k) {
    if (c.kind != k) {
        throw DomainError(std::string("expected a ") + kind_name(k) +
                          " case, got " + kind_name(c.kind));
    }
}

double marginal_product(const ExponentVector& a) {
    double p = 1.0;
    for (int i = 0; i < a.size(); ++i) p *= moments::abs_moment_1d(a[i], 1.0);
    return p;
}

BoundEval eval_thm1_1(const InequalityCase& c, const McOptions* mc) {
    BoundEval out;
    out.lhs = lhs_moment(c, mc);
    double bound = moments::abs_moment_1d(c.alphas[0], 1.0);
    for (int i = 1; i < c.alphas.size(); ++i) {
        const double r = c.sigma(0, i);
        bound *= (1.0 - r * r) * moments::abs_moment_1d(2.0, 1.0);
    }
    out.lower = bound;
    out.side_err = kClosedRel * bound;
    return out;
}

BoundEval eval_thm1_2(const InequalityCase& c, const McOptions* mc) {
    BoundEval out;
    out.lhs = lhs_moment(c, mc);
    const int n = c.alphas.size();
    std::vector<double> head(c.alphas.alphas().begin(),
                             c.alphas.alphas().end() - 1);
    const MomentEstimate joint =
        estimate_moment(principal_block(c.sigma, 0, n - 1), head, mc, 1);
    const double last = moments::abs_moment_1d(c.alphas[n - 1], 1.0);
    out.upper = joint.value * last;
    out.side_err = side_allowance(joint) * last + kClosedRel * *out.upper;
    return out;
}

BoundEval eval_remark_eq2(const InequalityCase& c, const McOptions* mc) {
    BoundEval out;
    out.lhs = lhs_moment(c, mc);
    const int n = c.alphas.size();
    const linalg::CholeskyFactor f = linalg::cholesky(c.sigma.sym());
    const auto d = f.diag();
    double bound = moments::abs_moment_1d(1.0, 1.0);
    for (int j = 0; j < n - 1; ++j) {
        // alpha_j < 0, so d_j^{alpha_j} = (1/d_j)^{|alpha_j|}.
        bound *= std::pow(d[static_cast<size_t>(j)], c.alphas[j]) *
                 moments::abs_moment_1d(c.alphas[j], 1.0);
    }
    out.upper = bound;
    out.side_err = kClosedRel * bound;
    return out;
}

BoundEval eval_prop1_3(const InequalityCase& c, const McOptions* mc) {
    BoundEval out;
    out.lhs = lhs_moment(c, mc);
    double bound = moments::abs_moment_1d(c.alphas[0], 1.0);
    for (int i = 1; i < 4; ++i) {
        const double r = c.sigma(0, i);
        bound *= std::pow(1.0 - r * r, 0.5 * c.alphas[i]) *
                 moments::abs_moment_1d(c.alphas[i], 1.0);
    }
    out.lower = bound;
    out.side_err = kClosedRel * bound;
    return out;
}

BoundEval eval_prop1_4(const InequalityCase& c, const McOptions* mc) {
    BoundEval out;
    out.lhs = lhs_moment(c, mc);
    const double marg = marginal_product(c.alphas);
    double shrink = 1.0;
    for (int i = 1; i < 3; ++i) {
        const double r = c.sigma(0, i);
        shrink *= std::pow(1.0 - r * r, 0.5 * c.alphas[i]);
    }
    out.lower = shrink * marg;
    out.upper = prop1_4_upper_constant(c.alphas[1], c.alphas[2]) * marg;
    out.side_err = kSeriesRel * *out.upper;
    return out;
}

BoundEval eval_prop1_5(const InequalityCase& c, const McOptions* mc) {
    BoundEval out;
    out.lhs = lhs_moment(c, mc);
    const double a = c.sigma(0, 1);
    const double det = linalg::det_sym(c.sigma.sym());
    out.lower = det / (1.0 - a * a) * marginal_product(c.alphas);
    const double joint =
        moments::nabeya_bivariate(c.alphas[0], c.alphas[1], 1.0, 1.0, a);
    out.upper = joint * moments::abs_moment_1d(c.alphas[2], 1.0);
    out.side_err = kSeriesRel * (*out.lower + *out.upper);
    out.diagnostics = prop1_5_diagnostics(c.sigma);
    return out;
}

BoundEval eval_wei_a3(const InequalityCase& c, const McOptions* mc) {
    BoundEval out;
    out.lhs = lhs_moment(c, mc);
    const int n = c.alphas.size();
    const int k = *c.split;
    const auto& a = c.alphas.alphas();
    const MomentEstimate left = estimate_moment(
        principal_block(c.sigma, 0, k), {a.begin(), a.begin() + k}, mc, 1);
    const MomentEstimate right = estimate_moment(
        principal_block(c.sigma, k, n), {a.begin() + k, a.end()}, mc, 2);
    out.lower = left.value * right.value;
    out.side_err = side_allowance(left) * right.value +
                   side_allowance(right) * left.value;
    return out;
}

BoundEval eval_opposite_n2(const InequalityCase& c, const McOptions* mc) {
    BoundEval out;
    out.lhs = lhs_moment(c, mc);
    out.upper = marginal_product(c.alphas);
    out.side_err = kClosedRel * *out.upper;
    return out;
}

BoundEval eval_gpi_n2(const InequalityCase& c, const McOptions* mc) {
    BoundEval out;
    out.lhs = lhs_moment(c, mc);
    out.lower = marginal_product(c.alphas);
    out.side_err = kClosedRel * *out.lower;
    return out;
}

BoundEval eval_even_gpi(const InequalityCase& c, const McOptions* mc) {
    BoundEval out;
    out.lhs = lhs_moment(c, mc);
    if (c.kind == Kind::even_gpi_1_6) {
        out.lower = marginal_product(c.alphas);
        out.side_err = kClosedRel * *out.lower;
        return out;
    }
    const int n = c.alphas.size();
    const int k = *c.split;
    const auto& a = c.alphas.alphas();
    const MomentEstimate left = estimate_moment(
        principal_block(c.sigma, 0, k), {a.begin(), a.begin() + k}, mc, 1);
    const MomentEstimate right = estimate_moment(
        principal_block(c.sigma, k, n), {a.begin() + k, a.end()}, mc, 2);
    out.lower = left.value * right.value;
    out.side_err = side_allowance(left) * right.value +
                   side_allowance(right) * left.value;
    return out;
}

BoundEval dispatch(const InequalityCase& c, const McOptions* mc) {
    switch (c.kind) {
        case Kind::thm1_1: return eval_thm1_1(c, mc);
        case Kind::thm1_2: return eval_thm1_2(c, mc);
        case Kind::remark_eq2: return eval_remark_eq2(c, mc);
        case Kind::prop1_3: return eval_prop1_3(c, mc);
        case Kind::prop1_4: return eval_prop1_4(c, mc);
        case Kind::prop1_5: return eval_prop1_5(c, mc);
        case Kind::wei_a3: return eval_wei_a3(c, mc);
        case Kind::opposite_n2: return eval_opposite_n2(c, mc);
        case Kind::gpi_n2: return eval_gpi_n2(c, mc);
        case Kind::even_gpi_1_6:
        case Kind::even_gpi_subset_1_7: return eval_even_gpi(c, mc);
    }
    throw DomainError("unhandled inequality kind");
}

}  // namespace

const char* kind_name(Kind k) {
    switch (k) {
        case Kind::thm1_1: return "thm1_1";
        case Kind::thm1_2: return "thm1_2";
        case Kind::remark_eq2: return "remark_eq2";
        case Kind::prop1_3: return "prop1_3";
        case Kind::prop1_4: return "prop1_4";
        case Kind::prop1_5: return "prop1_5";
        case Kind::wei_a3: return "wei_a3";
        case Kind::opposite_n2: return "opposite_n2";
        case Kind::gpi_n2: return "gpi_n2";
        case Kind::even_gpi_1_6: return "even_gpi_1_6";
        case Kind::even_gpi_subset_1_7: return "even_gpi_subset_1_7";
    }
    return "unknown";
}

Kind kind_from_string(const std::string& name) {
    for (Kind k : all_kinds()) {
        if (name == kind_name(k)) return k;
    }
    std::ostringstream msg;
    msg << "unknown inequality kind \"" << name << "\"; valid kinds:";
    for (Kind k : all_kinds()) msg << " " << kind_name(k);
    throw DomainError(msg.str());
}

const std::vector<Kind>& all_kinds() {
    static const std::vector<Kind> kinds{
        Kind::thm1_1,      Kind::thm1_2,  Kind::remark_eq2,
        Kind::prop1_3,     Kind::prop1_4, Kind::prop1_5,
        Kind::wei_a3,      Kind::opposite_n2, Kind::gpi_n2,
        Kind::even_gpi_1_6, Kind::even_gpi_subset_1_7};
    return kinds;
}

void validate_case(const InequalityCase& c) {
    const int n = c.alphas.size();
    if (c.sigma.size() != n) {
        reject(c.kind, "sigma dimension does not match the exponent count");
    }
    if (n < 2) reject(c.kind, "at least two coordinates are required");
    const auto& a = c.alphas;
    switch (c.kind) {
        case Kind::thm1_1:
            require_no_split(c);
            if (!in_neg_unit(a[0])) {
                reject(c.kind, "the first exponent must lie in (-1, 0)");
            }
            for (int i = 1; i < n; ++i) {
                if (std::abs(a[i] - 2.0) > 1e-12) {
                    reject(c.kind, "trailing exponents must equal 2");
                }
            }
            break;
        case Kind::thm1_2:
        case Kind::remark_eq2:
            require_no_split(c);
            for (int i = 0; i < n - 1; ++i) {
                if (!in_neg_unit(a[i])) {
                    reject(c.kind,
                           "the leading n-1 exponents must lie in (-1, 0)");
                }
            }
            if (!(a[n - 1] > 0.0)) {
                reject(c.kind, "the last exponent must be positive");
            }
            if (c.kind == Kind::remark_eq2 &&
                std::abs(a[n - 1] - 1.0) > 1e-12) {
                reject(c.kind, "the last exponent must equal 1");
            }
            break;
        case Kind::prop1_3: {
            require_no_split(c);
            if (n != 4) reject(c.kind, "requires exactly 4 coordinates");
            if (!in_neg_unit(a[0])) {
                reject(c.kind, "the first exponent must lie in (-1, 0)");
            }
            for (int i = 1; i < 4; ++i) {
                if (!positive_even_int(a[i]) || a[i] > 6.0 + 1e-9) {
                    reject(c.kind,
                           "trailing exponents must be even integers in "
                           "[2, 6]");
                }
            }
            break;
        }
        case Kind::prop1_4:
            require_no_split(c);
            if (n != 3) reject(c.kind, "requires exactly 3 coordinates");
            if (!in_neg_unit(a[0])) {
                reject(c.kind, "the first exponent must lie in (-1, 0)");
            }
            if (!(a[1] > 0.0) || !(a[2] > 0.0)) {
                reject(c.kind, "the trailing exponents must be positive");
            }
            break;
        case Kind::prop1_5:
            require_no_split(c);
            if (n != 3) reject(c.kind, "requires exactly 3 coordinates");
            if (!in_neg_unit(a[0]) || !in_neg_unit(a[1])) {
                reject(c.kind,
                       "the first two exponents must lie in (-1, 0)");
            }
            if (!(a[2] > 0.0)) {
                reject(c.kind, "the last exponent must be positive");
            }
            break;
        case Kind::wei_a3:
            require_split(c);
            for (int i = 0; i < n; ++i) {
                if (!in_neg_unit(a[i])) {
                    reject(c.kind, "every exponent must lie in (-1, 0)");
                }
            }
            break;
        case Kind::opposite_n2:
            require_no_split(c);
            if (n != 2) reject(c.kind, "requires exactly 2 coordinates");
            if (!in_neg_unit(a[0])) {
                reject(c.kind, "the first exponent must lie in (-1, 0)");
            }
            if (!(a[1] > 0.0)) {
                reject(c.kind, "the second exponent must be positive");
            }
            break;
        case Kind::gpi_n2:
            require_no_split(c);
            if (n != 2) reject(c.kind, "requires exactly 2 coordinates");
            if (!(a[0] > 0.0) || !(a[1] > 0.0)) {
                reject(c.kind, "both exponents must be positive");
            }
            break;
        case Kind::even_gpi_1_6:
        case Kind::even_gpi_subset_1_7: {
            if (c.kind == Kind::even_gpi_1_6) {
                require_no_split(c);
                if (n != 3) reject(c.kind, "requires exactly 3 coordinates");
            } else {
                require_split(c);
            }
            long long total = 0;
            for (int i = 0; i < n; ++i) {
                long long half = 0;
                if (!positive_even_int(a[i], &half)) {
                    reject(c.kind,
                           "every exponent must be a positive even integer");
                }
                total += half;
            }
            if (total > 8) {
                reject(c.kind, "total degree exceeds the pairing-sum cap "
                               "(sum of alpha/2 must be at most 8)");
            }
            if (c.kind == Kind::even_gpi_subset_1_7) {
                for (int i = 0; i < n; ++i) {
                    for (int j = 0; j < i; ++j) {
                        if (c.sigma(i, j) < -1e-12) {
                            reject(c.kind,
                                   "requires a nonnegative-entry "
                                   "correlation matrix");
                        }
                    }
                }
            }
            break;
        }
    }
}

double prop1_5_discriminant(double a, double b, double tau) {
    const double lin = -4.0 * a * b * tau - 8.0 * a * b * tau * tau;
    const double quad = 1.0 + 4.0 * tau + 4.0 * tau * tau;
    const double constant = 4.0 * a * a * b * b * tau * tau;
    return lin * lin - 4.0 * quad * constant;
}

Prop15Diagnostics prop1_5_diagnostics(const CorrelationMatrix& sigma) {
    if (sigma.size() != 3) {
        throw DomainError(
            "prop1_5 diagnostics require a 3x3 correlation matrix");
    }
    const double a = sigma(0, 1);
    const double b = sigma(0, 2);
    const double c = sigma(1, 2);
    const double det = linalg::det_sym(sigma.sym());
    Prop15Diagnostics d;
    d.K = 2.0 * b * b + 2.0 * c * c - 4.0 * a * b * c;
    d.I1 = 8.0 * c * c - 8.0 * a * b * c;
    d.I2 = 8.0 * (a * b - c) * (a * b - c);
    d.discriminant = prop1_5_discriminant(a, b, 1.0);
    d.g_limit = (1.0 - a * a) / (2.0 * det) - 0.5;
    d.var_floor = det / (1.0 - a * a);
    return d;
}

double prop1_4_upper_constant(double a2, double a3) {
    return specfun::gauss_2f1_at_one(-0.5 * a2, -0.5 * a3, 0.5);
}

MomentEstimate estimate_moment(const CorrelationMatrix& sigma,
                               const std::vector<double>& alphas,
                               const McOptions* mc, unsigned long long salt) {
    if (static_cast<int>(alphas.size()) != sigma.size()) {
        throw DomainError(
            "exponent count does not match the matrix dimension");
    }
    std::vector<int> keep;
    for (int i = 0; i < sigma.size(); ++i) {
        if (alphas[static_cast<size_t>(i)] != 0.0) keep.push_back(i);
    }
    if (keep.empty()) return closed_estimate(1.0, Method::closed, 0.0);
    CorrelationMatrix block =
        static_cast<int>(keep.size()) == sigma.size() ? sigma
                                                      : reordered(sigma, keep);
    std::vector<double> kept;
    kept.reserve(keep.size());
    for (int i : keep) kept.push_back(alphas[static_cast<size_t>(i)]);
    const ExponentVector ev = ExponentVector::from_list(kept);
    try {
        return deterministic_moment(block, ev);
    } catch (const CapabilityError&) {
        if (mc == nullptr || !mc->enabled) throw;
    }
    return moments::mc_mixed_moment(block.sym(), ev, mc->samples,
                                    salted_seed(mc->seed, salt));
}

BoundEval thm1_1_bound(const InequalityCase& c) {
    require_kind(c, Kind::thm1_1);
    validate_case(c);
    return eval_thm1_1(c, nullptr);
}

BoundEval thm1_2_bound(const InequalityCase& c) {
    require_kind(c, Kind::thm1_2);
    validate_case(c);
    return eval_thm1_2(c, nullptr);
}

BoundEval remark_eq2_bound(const InequalityCase& c) {
    require_kind(c, Kind::remark_eq2);
    validate_case(c);
    return eval_remark_eq2(c, nullptr);
}

BoundEval prop1_3_bound(const InequalityCase& c) {
    require_kind(c, Kind::prop1_3);
    validate_case(c);
    return eval_prop1_3(c, nullptr);
}

BoundEval prop1_4_bounds(const InequalityCase& c) {
    require_kind(c, Kind::prop1_4);
    validate_case(c);
    return eval_prop1_4(c, nullptr);
}

BoundEval prop1_5_bounds(const InequalityCase& c) {
    require_kind(c, Kind::prop1_5);
    validate_case(c);
    return eval_prop1_5(c, nullptr);
}

BoundEval wei_a3_bound(const InequalityCase& c) {
    require_kind(c, Kind::wei_a3);
    validate_case(c);
    return eval_wei_a3(c, nullptr);
}

BoundEval opposite_n2_bound(const InequalityCase& c) {
    require_kind(c, Kind::opposite_n2);
    validate_case(c);
    return eval_opposite_n2(c, nullptr);
}

BoundEval gpi_n2_bound(const InequalityCase& c) {
    require_kind(c, Kind::gpi_n2);
    validate_case(c);
    return eval_gpi_n2(c, nullptr);
}

BoundEval even_gpi_bound(const InequalityCase& c) {
    if (c.kind != Kind::even_gpi_1_6 && c.kind != Kind::even_gpi_subset_1_7) {
        throw DomainError("expected an even_gpi case, got " +
                          std::string(kind_name(c.kind)));
    }
    validate_case(c);
    return eval_even_gpi(c, nullptr);
}

BoundEval evaluate(const InequalityCase& c, const McOptions& opt) {
    validate_case(c);
    return dispatch(c, &opt);
}

}  // namespace gpi::bounds
