#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "gpi/bounds.hpp"
#include "gpi/errors.hpp"
#include "gpi/linalg.hpp"
#include "gpi/moments.hpp"

#include <cmath>
#include <random>

using namespace gpi;
using namespace gpi::bounds;
using namespace gpi::linalg;
using moments::ExponentVector;
using moments::Method;

namespace {

CorrelationMatrix corr2(double rho) {
    return CorrelationMatrix::from_rows({{1.0, rho}, {rho, 1.0}});
}

CorrelationMatrix corr3(double r12, double r13, double r23) {
    return CorrelationMatrix::from_rows(
        {{1.0, r12, r13}, {r12, 1.0, r23}, {r13, r23, 1.0}});
}

CorrelationMatrix random_correlation(int n, std::mt19937_64& eng,
                                     bool nonneg = false) {
    std::normal_distribution<double> normal;
    for (;;) {
        Matrix w(n, n + 3);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n + 3; ++j) {
                const double g = normal(eng);
                w.at(i, j) = nonneg ? std::abs(g) : g;
            }
        }
        SymMatrix s(n);
        for (int i = 0; i < n; ++i) {
            double nrm = 0.0;
            for (int j = 0; j < n + 3; ++j) nrm += w.at(i, j) * w.at(i, j);
            for (int j = 0; j < n + 3; ++j) w.at(i, j) /= std::sqrt(nrm);
        }
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k <= i; ++k) {
                double dot = 0.0;
                for (int j = 0; j < n + 3; ++j) dot += w.at(i, j) * w.at(k, j);
                s.set(i, k, i == k ? 1.0 : dot);
            }
        }
        try {
            return CorrelationMatrix(s);
        } catch (const NumericError&) {
            continue;
        }
    }
}

InequalityCase make_case(Kind k, const CorrelationMatrix& sigma,
                         const std::vector<double>& alphas,
                         std::optional<int> split = std::nullopt) {
    return InequalityCase{k, sigma, ExponentVector::from_list(alphas), split};
}

double lhs_allow(const BoundEval& b, double tol = 1e-9) {
    const double werr =
        b.lhs.method == Method::monte_carlo ? 4.0 * b.lhs.err : b.lhs.err;
    return werr + b.side_err + tol;
}

constexpr double kNegHalfMoment = 1.7200799746490390708;

}  // namespace

TEST_CASE("kind names round-trip and reject unknowns") {
    for (Kind k : all_kinds()) {
        CHECK(kind_from_string(kind_name(k)) == k);
    }
    CHECK(all_kinds().size() == 11);
    CHECK_THROWS_AS(kind_from_string("thm9_9"), DomainError);
    CHECK_THROWS_AS(kind_from_string(""), DomainError);
}

TEST_CASE("case validation enforces each kind's domain") {
    const auto id3 = CorrelationMatrix::from_rows(
        {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}});
    const auto id2 = corr2(0.0);

    CHECK_NOTHROW(validate_case(make_case(Kind::thm1_1, id3, {-0.5, 2, 2})));
    // dimension mismatch between sigma and alphas
    CHECK_THROWS_AS(validate_case(make_case(Kind::thm1_1, id3, {-0.5, 2})),
                    DomainError);
    // first exponent outside (-1, 0)
    CHECK_THROWS_AS(validate_case(make_case(Kind::thm1_1, id3, {0.5, 2, 2})),
                    DomainError);
    CHECK_THROWS_AS(validate_case(make_case(Kind::thm1_1, id3, {-1.0, 2, 2})),
                    DomainError);
    // trailing exponents must be exactly 2
    CHECK_THROWS_AS(validate_case(make_case(Kind::thm1_1, id3, {-0.5, 2, 4})),
                    DomainError);
    // split is rejected where it has no meaning
    CHECK_THROWS_AS(
        validate_case(make_case(Kind::thm1_1, id3, {-0.5, 2, 2}, 1)),
        DomainError);

    CHECK_NOTHROW(
        validate_case(make_case(Kind::thm1_2, id3, {-0.5, -0.25, 1.5})));
    CHECK_THROWS_AS(
        validate_case(make_case(Kind::thm1_2, id3, {-0.5, 0.25, 1.5})),
        DomainError);
    CHECK_THROWS_AS(
        validate_case(make_case(Kind::thm1_2, id3, {-0.5, -0.25, -0.5})),
        DomainError);

    CHECK_NOTHROW(
        validate_case(make_case(Kind::remark_eq2, id3, {-0.5, -0.25, 1.0})));
    CHECK_THROWS_AS(
        validate_case(make_case(Kind::remark_eq2, id3, {-0.5, -0.25, 1.5})),
        DomainError);

    const auto id4 = CorrelationMatrix(SymMatrix::identity(4));
    CHECK_NOTHROW(
        validate_case(make_case(Kind::prop1_3, id4, {-0.5, 2, 4, 6})));
    CHECK_THROWS_AS(
        validate_case(make_case(Kind::prop1_3, id4, {-0.5, 2, 3, 2})),
        DomainError);
    CHECK_THROWS_AS(
        validate_case(make_case(Kind::prop1_3, id4, {-0.5, 2, 8, 2})),
        DomainError);
    CHECK_THROWS_AS(
        validate_case(make_case(Kind::prop1_3, id3, {-0.5, 2, 2})),
        DomainError);

    CHECK_NOTHROW(
        validate_case(make_case(Kind::prop1_4, id3, {-0.5, 1.0, 2.7})));
    CHECK_THROWS_AS(
        validate_case(make_case(Kind::prop1_4, id3, {-0.5, -1e-3, 2.7})),
        DomainError);

    CHECK_NOTHROW(
        validate_case(make_case(Kind::prop1_5, id3, {-0.5, -0.9, 2.0})));
    CHECK_THROWS_AS(
        validate_case(make_case(Kind::prop1_5, id3, {-0.5, 0.9, 2.0})),
        DomainError);

    CHECK_NOTHROW(
        validate_case(make_case(Kind::wei_a3, id3, {-0.5, -0.2, -0.8}, 1)));
    CHECK_NOTHROW(
        validate_case(make_case(Kind::wei_a3, id3, {-0.5, -0.2, -0.8}, 2)));
    // split out of range / missing
    CHECK_THROWS_AS(
        validate_case(make_case(Kind::wei_a3, id3, {-0.5, -0.2, -0.8}, 3)),
        DomainError);
    CHECK_THROWS_AS(
        validate_case(make_case(Kind::wei_a3, id3, {-0.5, -0.2, -0.8})),
        DomainError);
    CHECK_THROWS_AS(
        validate_case(make_case(Kind::wei_a3, id3, {-0.5, 0.2, -0.8}, 1)),
        DomainError);

    CHECK_NOTHROW(
        validate_case(make_case(Kind::opposite_n2, id2, {-0.5, 3.0})));
    CHECK_THROWS_AS(validate_case(make_case(Kind::opposite_n2, id2,
                                            {0.5, 3.0})),
                    DomainError);
    CHECK_NOTHROW(validate_case(make_case(Kind::gpi_n2, id2, {0.5, 3.0})));
    CHECK_THROWS_AS(validate_case(make_case(Kind::gpi_n2, id2, {-0.5, 3.0})),
                    DomainError);

    CHECK_NOTHROW(
        validate_case(make_case(Kind::even_gpi_1_6, id3, {2, 4, 2})));
    CHECK_THROWS_AS(
        validate_case(make_case(Kind::even_gpi_1_6, id3, {2, 4, 2.5})),
        DomainError);
    // pairing cap: sum of half-exponents at most 8
    CHECK_THROWS_AS(
        validate_case(make_case(Kind::even_gpi_1_6, id3, {6, 6, 6})),
        DomainError);

    CHECK_NOTHROW(
        validate_case(make_case(Kind::even_gpi_subset_1_7, id3, {2, 2, 4}, 2)));
    const auto neg = corr3(-0.4, 0.2, 0.1);
    CHECK_THROWS_AS(
        validate_case(make_case(Kind::even_gpi_subset_1_7, neg, {2, 2, 2}, 1)),
        DomainError);
}

TEST_CASE("thm1_1: independence is tight and the spec hand case matches") {
    const auto id3 = CorrelationMatrix(SymMatrix::identity(3));
    auto be = thm1_1_bound(make_case(Kind::thm1_1, id3, {-0.5, 2, 2}));
    CHECK(*be.lower == doctest::Approx(kNegHalfMoment).epsilon(1e-12));
    CHECK(be.lhs.value ==
          doctest::Approx(*be.lower).epsilon(1e-8));

    // n = 2, alpha1 = -0.5, rho = 0.6: bound is 0.64 * E|X|^{-1/2}
    auto b2 = thm1_1_bound(make_case(Kind::thm1_1, corr2(0.6), {-0.5, 2}));
    CHECK(*b2.lower ==
          doctest::Approx(0.64 * kNegHalfMoment).epsilon(1e-12));
    CHECK(b2.lhs.value >= *b2.lower - lhs_allow(b2));
}

TEST_CASE("thm1_1: random three- and four-dimensional cases stay above") {
    std::mt19937_64 eng(420);
    std::uniform_real_distribution<double> ua(0.05, 0.95);
    for (int rep = 0; rep < 25; ++rep) {
        const int n = 3 + static_cast<int>(rep % 2);
        auto sigma = random_correlation(n, eng);
        std::vector<double> alphas(static_cast<size_t>(n), 2.0);
        alphas[0] = -ua(eng);
        auto be = thm1_1_bound(make_case(Kind::thm1_1, sigma, alphas));
        CHECK(be.lhs.value >= *be.lower - lhs_allow(be));
    }
}

TEST_CASE("thm1_2: diagonal equality, n2 reduction, random slack") {
    const auto id3 = CorrelationMatrix(SymMatrix::identity(3));
    auto be = thm1_2_bound(make_case(Kind::thm1_2, id3, {-0.3, -0.6, 2.2}));
    CHECK(be.lhs.value == doctest::Approx(*be.upper).epsilon(1e-8));

    // n = 2 coincides with the opposite-direction bivariate bound.
    auto t2 = thm1_2_bound(make_case(Kind::thm1_2, corr2(0.7), {-0.45, 1.8}));
    auto o2 =
        opposite_n2_bound(make_case(Kind::opposite_n2, corr2(0.7), {-0.45, 1.8}));
    CHECK(t2.lhs.value == doctest::Approx(o2.lhs.value).epsilon(1e-12));
    CHECK(*t2.upper == doctest::Approx(*o2.upper).epsilon(1e-12));

    std::mt19937_64 eng(421);
    std::uniform_real_distribution<double> ua(0.05, 0.95);
    std::uniform_real_distribution<double> up(0.1, 3.0);
    for (int rep = 0; rep < 12; ++rep) {
        auto sigma = random_correlation(3, eng);
        auto be3 = thm1_2_bound(make_case(
            Kind::thm1_2, sigma, {-ua(eng), -ua(eng), up(eng)}));
        CHECK(be3.lhs.value <= *be3.upper + lhs_allow(be3));
    }
    for (int rep = 0; rep < 6; ++rep) {
        auto sigma = random_correlation(4, eng);
        auto be4 = thm1_2_bound(make_case(
            Kind::thm1_2, sigma, {-ua(eng), -ua(eng), -0.35, up(eng)}));
        CHECK(be4.lhs.method == Method::quadrature);
        CHECK(be4.lhs.value <= *be4.upper + lhs_allow(be4));
    }
}

TEST_CASE("thm1_2: five dimensions exceeds the deterministic methods") {
    const auto id5 = CorrelationMatrix(SymMatrix::identity(5));
    auto c = make_case(Kind::thm1_2, id5, {-0.3, -0.3, -0.3, -0.3, 1.5});
    CHECK_THROWS_AS(thm1_2_bound(c), CapabilityError);
    McOptions mc;
    mc.samples = 40000;
    mc.seed = 7;
    auto be = evaluate(c, mc);
    CHECK(be.lhs.method == Method::monte_carlo);
    CHECK(be.lhs.value <= *be.upper + 6.0 * be.lhs.err + be.side_err);
    // disabled fallback propagates the capability error
    McOptions off;
    off.enabled = false;
    CHECK_THROWS_AS(evaluate(c, off), CapabilityError);
}

TEST_CASE("remark_eq2: Cholesky-diagonal upper bound") {
    // n = 2: the first diagonal entry is always 1, so the bound is the plain
    // marginal product whatever the correlation.
    const double expect =
        moments::abs_moment_1d(-0.5, 1.0) * moments::abs_moment_1d(1.0, 1.0);
    for (double rho : {0.0, 0.4, -0.8}) {
        auto be =
            remark_eq2_bound(make_case(Kind::remark_eq2, corr2(rho), {-0.5, 1}));
        CHECK(*be.upper == doctest::Approx(expect).epsilon(1e-12));
        CHECK(be.lhs.value <= *be.upper + lhs_allow(be));
    }

    // n = 3 hand case: the second pivot is sqrt(1 - r12^2).
    const double r12 = 0.6;
    auto s = corr3(r12, 0.3, 0.5);
    auto be = remark_eq2_bound(
        make_case(Kind::remark_eq2, s, {-0.25, -0.5, 1.0}));
    const double m22 = std::sqrt(1.0 - r12 * r12);
    const double hand = std::pow(1.0, 0.25) * std::pow(1.0 / m22, 0.5) *
                        moments::abs_moment_1d(-0.25, 1.0) *
                        moments::abs_moment_1d(-0.5, 1.0) *
                        moments::abs_moment_1d(1.0, 1.0);
    CHECK(*be.upper == doctest::Approx(hand).epsilon(1e-12));
    CHECK(be.lhs.value <= *be.upper + lhs_allow(be));

    // The Cholesky-scaled bound can never undercut the joint-moment bound.
    std::mt19937_64 eng(422);
    std::uniform_real_distribution<double> ua(0.05, 0.95);
    for (int rep = 0; rep < 10; ++rep) {
        auto sigma = random_correlation(3, eng);
        const std::vector<double> alphas{-ua(eng), -ua(eng), 1.0};
        auto r = remark_eq2_bound(make_case(Kind::remark_eq2, sigma, alphas));
        auto t = thm1_2_bound(make_case(Kind::thm1_2, sigma, alphas));
        CHECK(*r.upper >= *t.upper - 1e-9 * *r.upper - t.side_err);
    }
}

TEST_CASE("prop1_3: factorized matrices are tight, random cases stay above") {
    // X1 independent of (X2, X3, X4): both sides factor the first marginal,
    // and the remaining even block obeys the lower bound with equality only
    // in the fully diagonal case.
    auto block = CorrelationMatrix::from_rows({{1.0, 0.0, 0.0, 0.0},
                                               {0.0, 1.0, 0.5, 0.2},
                                               {0.0, 0.5, 1.0, 0.4},
                                               {0.0, 0.2, 0.4, 1.0}});
    auto be = prop1_3_bound(make_case(Kind::prop1_3, block, {-0.5, 2, 2, 2}));
    CHECK(be.lhs.value >= *be.lower - lhs_allow(be));

    const auto id4 = CorrelationMatrix(SymMatrix::identity(4));
    auto eq = prop1_3_bound(make_case(Kind::prop1_3, id4, {-0.7, 2, 4, 2}));
    CHECK(eq.lhs.value == doctest::Approx(*eq.lower).epsilon(1e-8));

    std::mt19937_64 eng(423);
    std::uniform_real_distribution<double> ua(0.05, 0.95);
    const std::vector<std::vector<double>> grids{
        {2, 2, 2}, {2, 4, 2}, {4, 2, 6}, {6, 4, 2}, {2, 2, 6}};
    for (int rep = 0; rep < 15; ++rep) {
        auto sigma = random_correlation(4, eng);
        auto tail = grids[static_cast<size_t>(rep) % grids.size()];
        std::vector<double> alphas{-ua(eng), tail[0], tail[1], tail[2]};
        auto r = prop1_3_bound(make_case(Kind::prop1_3, sigma, alphas));
        CHECK(r.lhs.value >= *r.lower - lhs_allow(r));
    }
}

TEST_CASE("prop1_4: hypergeometric upper constant") {
    CHECK(prop1_4_upper_constant(2.0, 2.0) == doctest::Approx(3.0).epsilon(1e-11));
    CHECK(prop1_4_upper_constant(1.0, 1.0) ==
          doctest::Approx(std::acos(-1.0) / 2.0).epsilon(1e-11));
    CHECK(prop1_4_upper_constant(0.0, 2.5) == doctest::Approx(1.0).epsilon(1e-13));
    for (double a2 : {0.1, 0.7, 1.5, 2.8, 4.0}) {
        for (double a3 : {0.2, 1.0, 2.0, 3.5}) {
            CHECK(prop1_4_upper_constant(a2, a3) > 1.0);
        }
    }
}

TEST_CASE("prop1_4: sandwich holds and independence sits on the lower edge") {
    const auto id3 = CorrelationMatrix(SymMatrix::identity(3));
    auto be = prop1_4_bounds(make_case(Kind::prop1_4, id3, {-0.5, 1.0, 1.0}));
    CHECK(be.lhs.value == doctest::Approx(*be.lower).epsilon(1e-9));
    CHECK(*be.upper > be.lhs.value);
    CHECK(*be.upper / *be.lower ==
          doctest::Approx(std::acos(-1.0) / 2.0).epsilon(1e-11));

    std::mt19937_64 eng(424);
    std::uniform_real_distribution<double> ua(0.05, 0.95);
    std::uniform_real_distribution<double> up(0.1, 3.0);
    for (int rep = 0; rep < 25; ++rep) {
        auto sigma = random_correlation(3, eng);
        auto r = prop1_4_bounds(make_case(
            Kind::prop1_4, sigma, {-ua(eng), up(eng), up(eng)}));
        CHECK(r.lhs.value >= *r.lower - lhs_allow(r));
        CHECK(r.lhs.value <= *r.upper + lhs_allow(r));
    }

    // equicorrelated spot check
    auto eqc = prop1_4_bounds(
        make_case(Kind::prop1_4, corr3(0.3, 0.3, 0.3), {-0.5, 1.0, 2.0}));
    CHECK(eqc.lhs.value >= *eqc.lower - lhs_allow(eqc));
    CHECK(eqc.lhs.value <= *eqc.upper + lhs_allow(eqc));
}

TEST_CASE("prop1_5: diagnostics identities on random PD triples") {
    std::mt19937_64 eng(425);
    std::uniform_real_distribution<double> u(-0.99, 0.99);
    int tested = 0;
    while (tested < 1000) {
        const double a = u(eng), b = u(eng), c = u(eng);
        const double det =
            1.0 + 2.0 * a * b * c - a * a - b * b - c * c;
        if (det < 1e-4) continue;
        ++tested;
        auto sigma = corr3(a, b, c);
        auto d = prop1_5_diagnostics(sigma);
        CHECK(d.K == doctest::Approx(2 * b * b + 2 * c * c - 4 * a * b * c)
                         .epsilon(1e-12));
        // reduced and unreduced forms of the first coefficient agree
        const double i1_raw = 2.0 * d.K - 4.0 * (1.0 - c * c) * b * b +
                              4.0 * c * c * (1.0 - b * b);
        CHECK(d.I1 == doctest::Approx(i1_raw).epsilon(1e-10));
        // second coefficient: both the Schur form and the square form
        const double i2_raw = 4.0 * d.K * (1.0 - b * b) - 8.0 * det * b * b;
        CHECK(d.I2 >= 0.0);
        CHECK(std::abs(d.I2 - i2_raw) <= 1e-10 * (1.0 + std::abs(d.I2)));
        CHECK(std::abs(d.discriminant) <= 1e-10);
        // companion coefficient with the roles of b and c swapped
        const double companion =
            4.0 * d.K * (1.0 - c * c) - 8.0 * det * c * c;
        CHECK(companion >= -1e-10);
        CHECK(std::abs(companion - 8.0 * (a * c - b) * (a * c - b)) <=
              1e-10 * (1.0 + companion));
        CHECK(d.var_floor > 0.0);
        CHECK(d.var_floor <= 1.0 + 1e-12);
        // the tilt-ratio supremum is the reciprocal statement of the floor
        CHECK(d.var_floor * (2.0 * d.g_limit + 1.0) ==
              doctest::Approx(1.0).epsilon(1e-10));
    }
    // the discriminant vanishes for every tilt parameter, not just tau = 1
    for (double tau : {0.01, 0.5, 1.0, 7.0, 300.0}) {
        CHECK(std::abs(prop1_5_discriminant(0.8, -0.6, tau)) <=
              1e-9 * (1.0 + 16.0 * 0.64 * 0.36 * tau * tau * tau * tau));
    }
    // a rank-consistent triple with c = a*b zeroes the second coefficient
    auto dz = prop1_5_diagnostics(corr3(0.7, 0.4, 0.28));
    CHECK(dz.I2 == doctest::Approx(0.0));
}

TEST_CASE("prop1_5: conditional variance respects the floor") {
    auto sigma = corr3(0.5, 0.85, 0.5);
    auto d = prop1_5_diagnostics(sigma);
    for (double t1 : {0.01, 0.1, 1.0, 10.0, 250.0}) {
        for (double t2 : {0.01, 0.3, 2.0, 40.0}) {
            const double v = moments::tilted_var_last(sigma, {t1, t2});
            CHECK(v >= d.var_floor - 1e-10);
            CHECK(v <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("prop1_5: sandwich on random cases with moderate last exponent") {
    const auto id3 = CorrelationMatrix(SymMatrix::identity(3));
    auto eq = prop1_5_bounds(make_case(Kind::prop1_5, id3, {-0.5, -0.5, 1.0}));
    CHECK(eq.lhs.value == doctest::Approx(*eq.lower).epsilon(1e-8));
    CHECK(eq.lhs.value == doctest::Approx(*eq.upper).epsilon(1e-8));

    std::mt19937_64 eng(426);
    std::uniform_real_distribution<double> ua(0.05, 0.95);
    std::uniform_real_distribution<double> up(0.1, 2.0);
    for (int rep = 0; rep < 20; ++rep) {
        auto sigma = random_correlation(3, eng);
        auto be = prop1_5_bounds(make_case(
            Kind::prop1_5, sigma, {-ua(eng), -ua(eng), up(eng)}));
        CHECK(be.lhs.value >= *be.lower - lhs_allow(be));
        CHECK(be.lhs.value <= *be.upper + lhs_allow(be));
        CHECK(be.diagnostics.has_value());
    }
}

TEST_CASE("prop1_5: the stated lower factor reverses past exponent 2") {
    // Characterization, not a defect: the published lower bound applies the
    // variance floor with power 1 instead of alpha3/2. The floor lies in
    // (0, 1], so the statement only follows for alpha3 <= 2, and a strong
    // correlation between the first and last coordinates breaks it beyond
    // that range. Reference value for the left side computed independently
    // by 30-digit singularity-free quadrature of the conditional moment.
    auto sigma = corr3(0.5, 0.85, 0.5);
    auto be = prop1_5_bounds(
        make_case(Kind::prop1_5, sigma, {-0.9, -0.9, 6.0}));
    CHECK(be.lhs.value ==
          doctest::Approx(57.8215863185216291).epsilon(1e-9));
    // stated bound: decisively violated (not a tolerance artifact)
    CHECK(be.lhs.value < 0.25 * *be.lower);
    // power-corrected floor: honored with room to spare
    auto d = *be.diagnostics;
    const double corrected =
        *be.lower * std::pow(d.var_floor, 0.5 * 6.0 - 1.0);
    CHECK(be.lhs.value >= corrected - lhs_allow(be));
    // upper side is unaffected
    CHECK(be.lhs.value <= *be.upper + lhs_allow(be));

    // the same configuration inside the trusted range holds as stated
    auto ok = prop1_5_bounds(
        make_case(Kind::prop1_5, sigma, {-0.9, -0.9, 2.0}));
    CHECK(ok.lhs.value >= *ok.lower - lhs_allow(ok));
}

TEST_CASE("wei_a3: split factorization stays below the joint moment") {
    const auto id3 = CorrelationMatrix(SymMatrix::identity(3));
    for (int k : {1, 2}) {
        auto be = wei_a3_bound(
            make_case(Kind::wei_a3, id3, {-0.4, -0.6, -0.2}, k));
        CHECK(be.lhs.value == doctest::Approx(*be.lower).epsilon(1e-8));
    }

    std::mt19937_64 eng(427);
    std::uniform_real_distribution<double> ua(0.05, 0.95);
    for (int rep = 0; rep < 8; ++rep) {
        auto s2 = random_correlation(2, eng);
        auto b2 = wei_a3_bound(
            make_case(Kind::wei_a3, s2, {-ua(eng), -ua(eng)}, 1));
        CHECK(b2.lhs.method == Method::nabeya);
        CHECK(b2.lhs.value >= *b2.lower - lhs_allow(b2));
    }
    for (int rep = 0; rep < 8; ++rep) {
        auto s3 = random_correlation(3, eng);
        const std::vector<double> alphas{-ua(eng), -ua(eng), -ua(eng)};
        for (int k : {1, 2}) {
            auto b3 = wei_a3_bound(make_case(Kind::wei_a3, s3, alphas, k));
            CHECK(b3.lhs.value >= *b3.lower - lhs_allow(b3));
        }
    }
}

TEST_CASE("opposite_n2 and gpi_n2: marginal product on the correct side") {
    auto oe = opposite_n2_bound(
        make_case(Kind::opposite_n2, corr2(0.0), {-0.5, 1.5}));
    CHECK(oe.lhs.value == doctest::Approx(*oe.upper).epsilon(1e-10));
    auto ge = gpi_n2_bound(make_case(Kind::gpi_n2, corr2(0.0), {0.5, 1.5}));
    CHECK(ge.lhs.value == doctest::Approx(*ge.lower).epsilon(1e-10));

    // squared-exponent closed form: joint moment is 1 + 2 rho^2
    auto sq = gpi_n2_bound(make_case(Kind::gpi_n2, corr2(0.6), {2.0, 2.0}));
    CHECK(sq.lhs.value == doctest::Approx(1.0 + 2.0 * 0.36).epsilon(1e-11));
    CHECK(*sq.lower == doctest::Approx(1.0).epsilon(1e-12));

    std::mt19937_64 eng(428);
    std::uniform_real_distribution<double> ua(0.05, 0.95);
    std::uniform_real_distribution<double> up(0.1, 3.5);
    for (double rho : {-0.999, -0.6, -0.1, 0.35, 0.87, 0.999}) {
        auto o = opposite_n2_bound(
            make_case(Kind::opposite_n2, corr2(rho), {-ua(eng), up(eng)}));
        CHECK(o.lhs.value <= *o.upper + lhs_allow(o));
        auto g = gpi_n2_bound(
            make_case(Kind::gpi_n2, corr2(rho), {up(eng), up(eng)}));
        CHECK(g.lhs.value >= *g.lower - lhs_allow(g));
    }
}

TEST_CASE("even exponents: trivariate lower bound and split factorization") {
    // hand value: E[X1^2 X2^2 X3^2] at equal correlation 1/2
    auto be = even_gpi_bound(
        make_case(Kind::even_gpi_1_6, corr3(0.5, 0.5, 0.5), {2, 2, 2}));
    CHECK(be.lhs.value == doctest::Approx(3.5).epsilon(1e-12));
    CHECK(*be.lower == doctest::Approx(1.0).epsilon(1e-12));

    const auto id3 = CorrelationMatrix(SymMatrix::identity(3));
    auto eq = even_gpi_bound(make_case(Kind::even_gpi_1_6, id3, {4, 2, 6}));
    CHECK(eq.lhs.value == doctest::Approx(*eq.lower).epsilon(1e-10));

    std::mt19937_64 eng(429);
    for (int rep = 0; rep < 12; ++rep) {
        auto sigma = random_correlation(3, eng);
        auto r = even_gpi_bound(make_case(
            Kind::even_gpi_1_6, sigma,
            {2.0 * (1 + rep % 3), 2.0, 2.0 * (1 + (rep / 3) % 2)}));
        CHECK(r.lhs.value >= *r.lower - lhs_allow(r));
    }

    // nonnegative-entry family, several dimensions and splits
    for (int rep = 0; rep < 12; ++rep) {
        const int n = 2 + rep % 4;
        auto sigma = random_correlation(n, eng, /*nonneg=*/true);
        std::vector<double> alphas;
        for (int i = 0; i < n; ++i) alphas.push_back(2.0 + 2.0 * (i % 2));
        const int k = 1 + rep % (n - 1 > 0 ? n - 1 : 1);
        auto r = even_gpi_bound(
            make_case(Kind::even_gpi_subset_1_7, sigma, alphas, k));
        CHECK(r.lhs.value >= *r.lower - lhs_allow(r));
    }
}

TEST_CASE("estimate_moment: dispatch, zero exponents, capability edges") {
    const auto id3 = CorrelationMatrix(SymMatrix::identity(3));
    auto z = estimate_moment(id3, {0.0, 2.0, 0.0});
    CHECK(z.value == doctest::Approx(1.0).epsilon(1e-14));
    // zero axes drop out, leaving a univariate closed form
    CHECK(z.method == Method::closed);

    auto all0 = estimate_moment(id3, {0.0, 0.0, 0.0});
    CHECK(all0.value == 1.0);

    CHECK(estimate_moment(corr2(0.5), {2.0, 2.0}).method == Method::isserlis);
    CHECK(estimate_moment(corr2(0.5), {-0.5, 1.5}).method == Method::nabeya);
    CHECK(estimate_moment(corr3(0.2, 0.3, 0.4), {-0.5, 2.0, 2.0}).method ==
          Method::quadrature);
    CHECK(estimate_moment(corr3(0.2, 0.3, 0.4), {-0.5, -0.2, -0.4}).method ==
          Method::quadrature);

    // the negative axis need not come first
    auto perm = estimate_moment(corr3(0.2, 0.3, 0.4), {2.0, -0.5, 2.0});
    auto direct = estimate_moment(corr3(0.2, 0.4, 0.3), {-0.5, 2.0, 2.0});
    CHECK(perm.value == doctest::Approx(direct.value).epsilon(1e-9));

    const auto id4 = CorrelationMatrix(SymMatrix::identity(4));
    CHECK_THROWS_AS(estimate_moment(id4, {-0.5, -0.5, -0.5, -0.5}),
                    CapabilityError);
    McOptions mc;
    mc.samples = 20000;
    mc.seed = 3;
    auto fb = estimate_moment(id4, {-0.45, -0.45, -0.45, -0.45}, &mc);
    CHECK(fb.method == Method::monte_carlo);
    CHECK(fb.samples.has_value());
}

TEST_CASE("evaluate: forced Monte Carlo keeps deterministic sides") {
    auto c = make_case(Kind::thm1_1, corr2(0.4), {-0.4, 2.0});
    McOptions mc;
    mc.samples = 60000;
    mc.seed = 11;
    mc.force = true;
    auto be = evaluate(c, mc);
    CHECK(be.lhs.method == Method::monte_carlo);
    CHECK(be.lhs.seed == 11ULL);
    // the bound side stays the closed form
    auto det = thm1_1_bound(c);
    CHECK(*be.lower == doctest::Approx(*det.lower).epsilon(1e-14));
    CHECK(be.lhs.value >= *be.lower - lhs_allow(be));
}
