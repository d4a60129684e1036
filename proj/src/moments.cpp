#include "gpi/moments.hpp"

#include "gpi/quadrature.hpp"
#include "gpi/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <sstream>

namespace gpi::moments {

namespace {

constexpr double kHalfLnPi = 0.57236494292470008707171367567652936;

bool is_even_integer(double x) {
    const double r = std::round(x);
    if (std::abs(x - r) > 1e-9) return false;
    const long long k = static_cast<long long>(r);
    return k % 2 == 0;
}

// Trailing (n-1)-block of sigma minus lam * t t', where t is the first
// column below the diagonal: the covariance of (Y_2..Y_n) under a tilt of
// strength lam in [0, 1] on the first axis.
SymMatrix first_axis_tilt_rest(const CorrelationMatrix& sigma, double lam) {
    const int n = sigma.size();
    SymMatrix d(n - 1);
    for (int i = 1; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            d.set(i - 1, j - 1, sigma(i, j) - lam * sigma(0, i) * sigma(0, j));
        }
    }
    return d;
}

} // namespace

const char* method_name(Method m) {
    switch (m) {
        case Method::closed: return "closed";
        case Method::nabeya: return "nabeya";
        case Method::isserlis: return "isserlis";
        case Method::quadrature: return "quadrature";
        case Method::monte_carlo: return "monte_carlo";
    }
    return "unknown";
}

ExponentVector ExponentVector::from_list(const std::vector<double>& alphas) {
    if (alphas.empty()) throw DomainError("ExponentVector: empty exponent list");
    ExponentVector v;
    v.alphas_ = alphas;
    for (int i = 0; i < static_cast<int>(alphas.size()); ++i) {
        const double a = alphas[i];
        if (!std::isfinite(a) || a <= -1.0) {
            std::ostringstream os;
            os << "exponent " << i << " is " << a
               << "; every exponent must be > -1 for the moment to exist";
            throw DomainError(os.str());
        }
        if (a < 0.0) {
            v.negative_.push_back(i);
        } else if (a > 0.0 && is_even_integer(a)) {
            v.even_.push_back(i);
        } else if (a > 0.0) {
            v.general_positive_.push_back(i);
        }
    }
    return v;
}

bool ExponentVector::all_even() const {
    for (double a : alphas_) {
        if (a < 0.0 || !is_even_integer(a)) return false;
    }
    return true;
}

double abs_moment_1d(double alpha, double variance) {
    if (!(alpha > -1.0)) {
        std::ostringstream os;
        os << "abs_moment_1d: exponent " << alpha
           << " <= -1, the moment is infinite";
        throw DomainError(os.str());
    }
    if (!(variance > 0.0)) {
        throw DomainError("abs_moment_1d: variance must be positive");
    }
    return std::exp(0.5 * alpha * std::log(2.0 * variance) +
                    specfun::log_gamma(0.5 * (alpha + 1.0)) - kHalfLnPi);
}

double nabeya_bivariate(double a2, double a3, double var2, double var3,
                        double rho) {
    if (std::abs(rho) > 1.0) {
        throw DomainError("nabeya_bivariate: |rho| must be <= 1");
    }
    const double marginals = abs_moment_1d(a2, var2) * abs_moment_1d(a3, var3);
    const double f =
        specfun::gauss_2f1({-0.5 * a2, -0.5 * a3, 0.5, rho * rho});
    return marginals * f;
}

double isserlis_even_moment(const SymMatrix& sigma, const std::vector<int>& m) {
    const int n = sigma.size();
    if (static_cast<int>(m.size()) != n) {
        throw DomainError("isserlis_even_moment: exponent list size mismatch");
    }
    int total = 0;
    for (int mi : m) {
        if (mi < 0) throw DomainError("isserlis_even_moment: m entries must be >= 0");
        total += mi;
    }
    if (total > 8) {
        std::ostringstream os;
        os << "isserlis_even_moment: sum of m is " << total
           << ", above the supported cap of 8";
        throw CapabilityError(os.str());
    }

    std::map<std::vector<int>, double> memo;
    std::function<double(std::vector<int>&)> wick =
        [&](std::vector<int>& deg) -> double {
        int a = -1;
        for (int i = 0; i < n; ++i) {
            if (deg[i] > 0) {
                a = i;
                break;
            }
        }
        if (a < 0) return 1.0;
        const auto it = memo.find(deg);
        if (it != memo.end()) return it->second;

        // E[x_a P] = sum_b sigma_ab E[dP/dx_b] with P = prod x^{deg - e_a}.
        double sum = 0.0;
        deg[a] -= 1;
        for (int bidx = 0; bidx < n; ++bidx) {
            const int count = deg[bidx];
            if (count == 0) continue;
            const double sab = sigma(a, bidx);
            if (sab == 0.0) continue;
            deg[bidx] -= 1;
            sum += sab * count * wick(deg);
            deg[bidx] += 1;
        }
        deg[a] += 1;
        memo.emplace(deg, sum);
        return sum;
    };

    std::vector<int> deg(n);
    for (int i = 0; i < n; ++i) deg[i] = 2 * m[i];
    return wick(deg);
}

TiltedGaussian tilted(const CorrelationMatrix& sigma, const Vec& tilt) {
    const int n = sigma.size();
    if (static_cast<int>(tilt.size()) != n) {
        throw DomainError("tilted: tilt length must equal the dimension");
    }
    for (double t : tilt) {
        if (!(t >= 0.0)) throw DomainError("tilted: tilt entries must be >= 0");
    }
    SymMatrix precision = linalg::inverse_spd(sigma.sym());
    for (int i = 0; i < n; ++i) {
        precision.set(i, i, precision(i, i) + 2.0 * tilt[i]);
    }
    SymMatrix cov = linalg::inverse_spd(precision);

    Vec var_diag(n);
    for (int i = 0; i < n; ++i) var_diag[i] = cov(i, i);
    if (tilt[n - 1] == 0.0 && var_diag[n - 1] > 1.0 + 1e-10) {
        std::ostringstream os;
        os << "tilted: Var(Y_n) = " << var_diag[n - 1]
           << " exceeds 1 with an untilted last axis";
        throw NumericError(os.str());
    }
    SymMatrix rho_t = linalg::correlation_of(cov).sym();
    return TiltedGaussian{sigma, tilt, std::move(cov), std::move(var_diag),
                          std::move(rho_t)};
}

double tilted_var_last(const CorrelationMatrix& sigma, const Vec& t1) {
    const int n = sigma.size();
    if (static_cast<int>(t1.size()) != n - 1) {
        throw DomainError("tilted_var_last: tilt length must be n - 1");
    }
    for (double t : t1) {
        if (!(t > 0.0)) {
            throw DomainError("tilted_var_last: tilts must be strictly positive");
        }
    }
    if (n == 1) return 1.0;

    // M = T1^{-1} + 2 (S1 - t t'), SPD by construction for PD sigma.
    const SymMatrix reduced = linalg::lemma_2_3_schur(sigma);
    SymMatrix m(n - 1);
    Vec t(n - 1);
    for (int i = 0; i < n - 1; ++i) {
        t[i] = sigma(i, n - 1);
        for (int j = i; j < n - 1; ++j) {
            m.set(i, j, 2.0 * reduced(i, j) + (i == j ? 1.0 / t1[i] : 0.0));
        }
    }
    Vec w;
    try {
        w = linalg::solve_spd(m, t);
    } catch (const NotPositiveDefinite& e) {
        throw NumericError(std::string("tilted_var_last: internal Cholesky "
                                       "failure on a PD-by-construction "
                                       "matrix: ") +
                           e.what());
    }
    const double v = 1.0 / (1.0 + 2.0 * linalg::dot(t, w));
    if (!(v > 0.0) || v > 1.0 + 1e-12) {
        std::ostringstream os;
        os << "tilted_var_last: value " << v << " outside (0, 1]";
        throw NumericError(os.str());
    }
    return std::min(v, 1.0);
}

MomentEstimate mixed_moment_one_negative(const CorrelationMatrix& sigma,
                                         double alpha1,
                                         const std::vector<double>& rest) {
    const int n = sigma.size();
    if (static_cast<int>(rest.size()) != n - 1) {
        throw DomainError(
            "mixed_moment_one_negative: rest must hold n - 1 exponents");
    }
    if (!(alpha1 > 0.0 && alpha1 < 1.0)) {
        std::ostringstream os;
        os << "mixed_moment_one_negative: negated exponent magnitude "
           << alpha1 << " outside (0, 1)";
        throw DomainError(os.str());
    }
    for (double a : rest) {
        if (!(a > 0.0)) {
            throw DomainError(
                "mixed_moment_one_negative: positive part must be > 0");
        }
    }

    // Inner moment of the tilted remainder as a function of the tilt
    // strength lam = 2s/(1+2s) on the first axis.
    std::function<double(double)> inner;
    bool rest_even = !rest.empty();
    for (double a : rest) rest_even = rest_even && is_even_integer(a);
    if (rest.empty()) {
        inner = [](double) { return 1.0; };
    } else if (rest_even) {
        std::vector<int> m(rest.size());
        for (size_t i = 0; i < rest.size(); ++i) {
            m[i] = static_cast<int>(std::llround(rest[i])) / 2;
        }
        int total = 0;
        for (int mi : m) total += mi;
        if (total > 8) {
            throw CapabilityError(
                "mixed_moment_one_negative: even positive part exceeds the "
                "pairing-recursion degree cap (sum of alpha/2 above 8)");
        }
        inner = [&sigma, m](double lam) {
            return isserlis_even_moment(first_axis_tilt_rest(sigma, lam), m);
        };
    } else if (n == 2) {
        const double a2 = rest[0];
        inner = [&sigma, a2](double lam) {
            const SymMatrix d = first_axis_tilt_rest(sigma, lam);
            return abs_moment_1d(a2, d(0, 0));
        };
    } else if (n == 3) {
        const double a2 = rest[0], a3 = rest[1];
        inner = [&sigma, a2, a3](double lam) {
            const SymMatrix d = first_axis_tilt_rest(sigma, lam);
            const double rho = d(0, 1) / std::sqrt(d(0, 0) * d(1, 1));
            return nabeya_bivariate(a2, a3, d(0, 0), d(1, 1), rho);
        };
    } else {
        throw CapabilityError(
            "mixed_moment_one_negative: general positive exponents are "
            "supported only for n <= 3; use even integers or monte carlo");
    }

    // Head: original variable t on [0,1], tilt s = t^{2/alpha1}.
    const double two_over_a = 2.0 / alpha1;
    const auto head = quadrature::integrate_gk(
        [&](double t) {
            const double s = std::pow(t, two_over_a);
            return std::pow(1.0 + 2.0 * s, -0.5) *
                   inner(2.0 * s / (1.0 + 2.0 * s));
        },
        0.0, 1.0, 1e-13, 1e-10);

    // Tail: s in [1, inf) mapped to u in (0, 1] with s = u^{-p},
    // p = 2/(1-alpha1), which flattens the algebraic endpoint.
    const double p = 2.0 / (1.0 - alpha1);
    const auto tail = quadrature::integrate_gk(
        [&](double u) {
            const double up = std::exp(p * std::log(u));
            return std::pow(up + 2.0, -0.5) * inner(2.0 / (2.0 + up));
        },
        0.0, 1.0, 1e-13, 1e-10);

    const double inv_gamma =
        std::exp(-specfun::log_gamma(1.0 + 0.5 * alpha1));
    const double tail_factor = alpha1 / (1.0 - alpha1);
    const double value = (head.value + tail_factor * tail.value) * inv_gamma;
    const double err = (head.err + tail_factor * tail.err) * inv_gamma +
                       1e-12 * std::abs(value);

    MomentEstimate est;
    est.value = value;
    est.method = Method::quadrature;
    est.err = err;
    return est;
}

MomentEstimate mixed_moment_multi_negative(const CorrelationMatrix& sigma,
                                           const std::vector<double>& neg,
                                           std::optional<double> pos_last) {
    const int k = static_cast<int>(neg.size());
    if (k == 0) {
        throw DomainError(
            "mixed_moment_multi_negative: need at least one negative exponent");
    }
    if (k > 3) {
        std::ostringstream os;
        os << "mixed_moment_multi_negative: " << k
           << " negative exponents exceed the tensor-quadrature cap of 3; "
              "use monte carlo";
        throw CapabilityError(os.str());
    }
    const int n = k + (pos_last ? 1 : 0);
    if (sigma.size() != n) {
        std::ostringstream os;
        os << "mixed_moment_multi_negative: matrix dimension " << sigma.size()
           << " does not match exponent count " << n;
        throw DomainError(os.str());
    }
    for (double a : neg) {
        if (!(a > 0.0 && a < 1.0)) {
            throw DomainError("mixed_moment_multi_negative: negative-exponent "
                              "magnitudes must lie in (0, 1)");
        }
    }
    if (pos_last && !(*pos_last > 0.0)) {
        throw DomainError("mixed_moment_multi_negative: pos_last must be > 0");
    }

    // Last-axis pieces: marginal moment constant and the Schur-reduced
    // block for the closed-form tilted variance.
    const double c_last = pos_last ? abs_moment_1d(*pos_last, 1.0) : 1.0;
    SymMatrix reduced(1);
    Vec t(k, 0.0);
    if (pos_last) {
        reduced = linalg::lemma_2_3_schur(sigma);
        for (int i = 0; i < k; ++i) t[i] = sigma(i, n - 1);
    }

    // Per-axis constants and Jacobi weights: after s = mu^2/(2(1-mu^2)) the
    // axis measure is alpha 2^{-alpha/2} mu^{alpha-1} (1-mu^2)^{-(1+alpha)/2};
    // mapping [0,1] -> [-1,1] adds 2^{(1-alpha)/2} and leaves the Jacobi
    // weight (1-x)^{-(1+alpha)/2} (1+x)^{alpha-1}.
    double prefactor = c_last;
    for (double a : neg) {
        prefactor *= a * std::exp((0.5 - a) * std::log(2.0) -
                                  specfun::log_gamma(1.0 + 0.5 * a));
    }

    const std::vector<int> ladder =
        (k <= 2) ? std::vector<int>{16, 24, 36, 54, 80}
                 : std::vector<int>{12, 18, 27, 40};
    const double rel_target = (k <= 2) ? 1e-6 : 1e-4;

    auto tensor_value = [&](int n_nodes) {
        std::vector<std::vector<double>> mu(k), w(k);
        for (int i = 0; i < k; ++i) {
            const auto rule = quadrature::gauss_jacobi(
                n_nodes, -0.5 * (1.0 + neg[i]), neg[i] - 1.0);
            mu[i].resize(rule.n);
            w[i].resize(rule.n);
            for (int j = 0; j < rule.n; ++j) {
                mu[i][j] = 0.5 * (rule.nodes[j] + 1.0);
                w[i][j] = rule.weights[j];
            }
        }

        auto integrand = [&](const double* m) {
            double det_h = 1.0;
            if (k == 2) {
                const double p01 = m[0] * m[1] * sigma(0, 1);
                det_h = 1.0 - p01 * p01;
            } else if (k == 3) {
                const double p = m[0] * m[1] * sigma(0, 1);
                const double q = m[0] * m[2] * sigma(0, 2);
                const double r = m[1] * m[2] * sigma(1, 2);
                det_h = 1.0 - p * p - q * q - r * r + 2.0 * p * q * r;
            }
            if (!(det_h > 0.0)) {
                std::ostringstream os;
                os << "mixed_moment_multi_negative: tilt determinant " << det_h
                   << " not positive";
                throw NumericError(os.str());
            }
            double g = 1.0 / std::sqrt(det_h);
            for (int i = 0; i < k; ++i) {
                g *= std::pow(1.0 + m[i], -0.5 * (1.0 + neg[i]));
            }
            if (pos_last) {
                // Var(Y_n) = [1 + 2 t'(T^{-1} + 2(S1-tt'))^{-1} t]^{-1} with
                // T^{-1}_ii = 2(1-mu_i^2)/mu_i^2.
                SymMatrix mm(k);
                for (int i = 0; i < k; ++i) {
                    for (int j = i; j < k; ++j) {
                        double v = 2.0 * reduced(i, j);
                        if (i == j) {
                            v += 2.0 * (1.0 - m[i] * m[i]) / (m[i] * m[i]);
                        }
                        mm.set(i, j, v);
                    }
                }
                const Vec sol = linalg::solve_spd(mm, t);
                const double var_last =
                    1.0 / (1.0 + 2.0 * linalg::dot(t, sol));
                g *= std::pow(var_last, 0.5 * *pos_last);
            }
            return g;
        };

        double sum = 0.0;
        double m[3];
        if (k == 1) {
            for (size_t i = 0; i < mu[0].size(); ++i) {
                m[0] = mu[0][i];
                sum += w[0][i] * integrand(m);
            }
        } else if (k == 2) {
            for (size_t i = 0; i < mu[0].size(); ++i) {
                m[0] = mu[0][i];
                double row = 0.0;
                for (size_t j = 0; j < mu[1].size(); ++j) {
                    m[1] = mu[1][j];
                    row += w[1][j] * integrand(m);
                }
                sum += w[0][i] * row;
            }
        } else {
            for (size_t i = 0; i < mu[0].size(); ++i) {
                m[0] = mu[0][i];
                for (size_t j = 0; j < mu[1].size(); ++j) {
                    m[1] = mu[1][j];
                    double row = 0.0;
                    for (size_t l = 0; l < mu[2].size(); ++l) {
                        m[2] = mu[2][l];
                        row += w[2][l] * integrand(m);
                    }
                    sum += w[0][i] * w[1][j] * row;
                }
            }
        }
        return prefactor * sum;
    };

    double prev = tensor_value(ladder[0]);
    for (size_t step = 1; step < ladder.size(); ++step) {
        const double cur = tensor_value(ladder[step]);
        const double gap = std::abs(cur - prev);
        if (gap <= rel_target * std::abs(cur)) {
            MomentEstimate est;
            est.value = cur;
            est.method = Method::quadrature;
            est.err = gap + 1e-12 * std::abs(cur);
            return est;
        }
        prev = cur;
    }
    std::ostringstream os;
    os << "mixed_moment_multi_negative: tensor quadrature did not converge "
          "to relative target "
       << rel_target << "; last value " << prev;
    throw NumericError(os.str());
}

MomentEstimate mc_mixed_moment(const SymMatrix& sigma,
                               const ExponentVector& alphas,
                               long long n_samples, unsigned long long seed) {
    const int n = sigma.size();
    if (alphas.size() != n) {
        throw DomainError("mc_mixed_moment: exponent count must match the "
                          "matrix dimension");
    }
    if (n_samples < 2) {
        throw DomainError("mc_mixed_moment: need at least 2 samples");
    }
    linalg::CholeskyFactor chol;
    try {
        chol = linalg::cholesky(sigma);
    } catch (const NotPositiveDefinite& e) {
        throw NotPositiveDefinite(
            std::string(e.what()) +
            "; apply shrink_to_pd to sample from a nearby PD matrix");
    }

    // Deterministic uniforms straight from the 64-bit stream keep results
    // identical across standard-library implementations.
    std::mt19937_64 eng(seed);
    auto next_uniform = [&eng]() {
        return static_cast<double>(eng() >> 11) * 0x1.0p-53;
    };
    bool have_spare = false;
    double spare = 0.0;
    auto next_normal = [&]() {
        if (have_spare) {
            have_spare = false;
            return spare;
        }
        const double u1 = 1.0 - next_uniform();  // in (0, 1]
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        spare = r * std::sin(angle);
        have_spare = true;
        return r * std::cos(angle);
    };

    const std::vector<double>& a = alphas.alphas();
    Vec z(n);
    double sum = 0.0, sumsq = 0.0;
    for (long long it = 0; it < n_samples; ++it) {
        for (int i = 0; i < n; ++i) z[i] = next_normal();
        const Vec x = chol.apply(z);
        double logf = 0.0;
        for (int i = 0; i < n; ++i) {
            logf += a[i] * std::log(std::max(std::abs(x[i]), 1e-300));
        }
        const double f = std::exp(logf);
        sum += f;
        sumsq += f * f;
    }
    const double mean = sum / static_cast<double>(n_samples);
    const double var = std::max(
        0.0, (sumsq - static_cast<double>(n_samples) * mean * mean) /
                 static_cast<double>(n_samples - 1));
    MomentEstimate est;
    est.value = mean;
    est.method = Method::monte_carlo;
    est.err = std::sqrt(var / static_cast<double>(n_samples));
    est.samples = n_samples;
    est.seed = seed;
    est.err_reliable = true;
    for (double ai : a) {
        if (ai <= -0.5) est.err_reliable = false;
    }
    return est;
}

} // namespace gpi::moments
