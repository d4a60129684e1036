#include "gpi/cli.hpp"

#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gpi/bounds.hpp"
#include "gpi/errors.hpp"
#include "gpi/linalg.hpp"
#include "gpi/moments.hpp"
#include "gpi/verifier.hpp"

namespace gpi::cli {

namespace {

using linalg::CorrelationMatrix;
using linalg::Json;
using linalg::SymMatrix;
using moments::ExponentVector;
using moments::Method;
using moments::MomentEstimate;

Json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open file: " + path);
    try {
        Json j;
        in >> j;
        return j;
    } catch (const std::exception& e) {
        throw DomainError("could not parse JSON in " + path + ": " +
                          e.what());
    }
}

std::vector<double> parse_alphas(const std::string& csv) {
    std::vector<double> out;
    std::istringstream in(csv);
    std::string token;
    while (std::getline(in, token, ',')) {
        try {
            size_t used = 0;
            const double v = std::stod(token, &used);
            while (used < token.size() &&
                   std::isspace(static_cast<unsigned char>(token[used]))) {
                ++used;
            }
            if (used != token.size()) throw std::invalid_argument(token);
            out.push_back(v);
        } catch (const std::exception&) {
            throw DomainError("could not parse exponent \"" + token +
                              "\" in --alpha " + csv);
        }
    }
    if (out.empty()) throw DomainError("--alpha needs at least one exponent");
    return out;
}

SymMatrix reorder(const SymMatrix& s, const std::vector<int>& perm) {
    SymMatrix r(s.size());
    for (int i = 0; i < s.size(); ++i) {
        for (int j = 0; j <= i; ++j) r.set(i, j, s(perm[i], perm[j]));
    }
    return r;
}

// Quadrature on demand: negative axes are permuted to the front, which
// leaves the moment unchanged.
MomentEstimate forced_quadrature(const CorrelationMatrix& sigma,
                                 const std::vector<double>& alphas) {
    std::vector<int> neg_axes;
    std::vector<int> pos_axes;
    for (size_t i = 0; i < alphas.size(); ++i) {
        (alphas[i] < 0.0 ? neg_axes : pos_axes)
            .push_back(static_cast<int>(i));
    }
    if (neg_axes.empty()) {
        throw CapabilityError(
            "the quadrature method needs a negative exponent; use --method "
            "auto, isserlis, or mc");
    }
    std::vector<int> perm = neg_axes;
    perm.insert(perm.end(), pos_axes.begin(), pos_axes.end());
    const CorrelationMatrix rho(reorder(sigma.sym(), perm));
    if (neg_axes.size() == 1) {
        std::vector<double> rest;
        for (int axis : pos_axes) rest.push_back(alphas[axis]);
        return moments::mixed_moment_one_negative(
            rho, -alphas[neg_axes.front()], rest);
    }
    std::vector<double> neg;
    for (int axis : neg_axes) neg.push_back(-alphas[axis]);
    if (pos_axes.size() > 1) {
        throw CapabilityError(
            "quadrature with several negative exponents supports at most "
            "one positive exponent");
    }
    std::optional<double> pos;
    if (!pos_axes.empty()) pos = alphas[pos_axes.front()];
    return moments::mixed_moment_multi_negative(rho, neg, pos);
}

MomentEstimate forced_isserlis(const CorrelationMatrix& sigma,
                               const ExponentVector& ev) {
    if (!ev.all_even()) {
        throw CapabilityError(
            "the isserlis method needs all exponents to be even "
            "nonnegative integers");
    }
    std::vector<int> m;
    for (double a : ev.alphas()) {
        m.push_back(static_cast<int>(std::llround(a)) / 2);
    }
    MomentEstimate est;
    est.value = moments::isserlis_even_moment(sigma.sym(), m);
    est.method = Method::isserlis;
    est.err = 1e-12 * std::abs(est.value);
    return est;
}

MomentEstimate forced_nabeya(const CorrelationMatrix& sigma,
                             const std::vector<double>& alphas) {
    if (alphas.size() != 2) {
        throw CapabilityError("the nabeya method is bivariate only");
    }
    MomentEstimate est;
    est.value = moments::nabeya_bivariate(alphas[0], alphas[1], 1.0, 1.0,
                                          sigma(1, 0));
    est.method = Method::nabeya;
    est.err = 1e-11 * std::abs(est.value);
    return est;
}

Json estimate_json(const MomentEstimate& est) {
    Json j;
    j["value"] = est.value;
    j["method"] = moments::method_name(est.method);
    j["err"] = est.err;
    j["err_reliable"] = est.err_reliable;
    if (est.samples) j["samples"] = *est.samples;
    if (est.seed) j["seed"] = *est.seed;
    return j;
}

int run_moment(const std::string& sigma_path, const std::string& alpha_csv,
               const std::string& method, long long samples,
               unsigned long long seed, std::ostream& out) {
    const std::vector<double> alphas = parse_alphas(alpha_csv);
    const SymMatrix cov = SymMatrix::from_json(load_json(sigma_path));
    if (cov.size() != static_cast<int>(alphas.size())) {
        throw DomainError("--alpha lists " + std::to_string(alphas.size()) +
                          " exponents for a " + std::to_string(cov.size()) +
                          "-dimensional sigma");
    }
    // moments scale out of a covariance: factor the diagonal first
    double scale = 1.0;
    for (size_t i = 0; i < alphas.size(); ++i) {
        scale *= std::pow(cov(static_cast<int>(i), static_cast<int>(i)),
                          alphas[i] / 2.0);
    }
    const CorrelationMatrix rho = linalg::correlation_of(cov);
    const ExponentVector ev = ExponentVector::from_list(alphas);

    MomentEstimate est;
    if (method == "auto") {
        bounds::McOptions mc;
        mc.samples = samples;
        mc.seed = seed;
        est = bounds::estimate_moment(rho, alphas, &mc);
    } else if (method == "quad") {
        est = forced_quadrature(rho, alphas);
    } else if (method == "mc") {
        est = moments::mc_mixed_moment(rho.sym(), ev, samples, seed);
    } else if (method == "isserlis") {
        est = forced_isserlis(rho, ev);
    } else {
        est = forced_nabeya(rho, alphas);
    }
    est.value *= scale;
    est.err *= scale;
    out << estimate_json(est).dump(2) << '\n';
    return 0;
}

int run_bound(const std::string& kind_name, const std::string& sigma_path,
              const std::string& alpha_csv, std::optional<int> split,
              double tol, long long samples, unsigned long long seed,
              bool no_mc, std::ostream& out, std::ostream& err) {
    const bounds::Kind kind = bounds::kind_from_string(kind_name);
    const CorrelationMatrix sigma =
        CorrelationMatrix::from_json(load_json(sigma_path));
    const ExponentVector ev = ExponentVector::from_list(parse_alphas(alpha_csv));
    const bounds::InequalityCase c{kind, sigma, ev, split};
    bounds::McOptions mc;
    mc.samples = samples;
    mc.seed = seed;
    mc.enabled = !no_mc;
    const verifier::CaseResult r = verifier::check_case(c, tol, mc);
    out << verifier::case_json(r).dump(2) << '\n';
    switch (r.status) {
        case verifier::CaseStatus::pass:
            return 0;
        case verifier::CaseStatus::fail:
            err << "bound violated: slack below -(err + tolerance)\n";
            return 1;
        case verifier::CaseStatus::skip:
            err << "not checkable: " << r.note << '\n';
            return 3;
    }
    return 3;
}

int emit(const verifier::Report& report, const std::string& out_path,
         const std::string& format, std::ostream& out, std::ostream& err) {
    const verifier::ReportFormat fmt = format == "csv"
                                           ? verifier::ReportFormat::csv
                                           : verifier::ReportFormat::json;
    if (out_path.empty()) {
        if (fmt == verifier::ReportFormat::json) {
            out << verifier::report_json(report).dump(2) << '\n';
        } else {
            out << verifier::report_csv(report);
        }
    } else {
        verifier::emit_report(report, fmt, out_path);
        err << "report written to " << out_path << '\n';
    }
    const verifier::Summary& s = report.summary;
    err << "checked " << s.total << " cases: " << s.passed << " passed, "
        << s.failed << " failed, " << s.skipped << " skipped\n";
    return s.failed > 0 ? 1 : 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err) {
    CLI::App app{
        "mixed absolute moments of centered Gaussian vectors, product "
        "inequality bounds, and randomized verification sweeps"};
    app.require_subcommand(1);

    // moment
    std::string m_sigma;
    std::string m_alpha;
    std::string m_method = "auto";
    long long m_samples = 200000;
    unsigned long long m_seed = 1;
    CLI::App* moment =
        app.add_subcommand("moment", "compute E[prod_j |X_j|^alpha_j]");
    moment->add_option("--sigma", m_sigma, "covariance JSON file")
        ->required();
    moment
        ->add_option("--alpha", m_alpha,
                     "comma-separated exponents, negatives in (-1, 0)")
        ->required();
    moment->add_option("--method", m_method, "estimation method")
        ->check(CLI::IsMember({"auto", "quad", "mc", "isserlis", "nabeya"}));
    moment->add_option("--samples", m_samples, "Monte Carlo sample count");
    moment->add_option("--seed", m_seed, "Monte Carlo seed");

    // bound
    std::string b_kind;
    std::string b_sigma;
    std::string b_alpha;
    int b_split = -1;
    double b_tol = 1e-7;
    long long b_samples = 200000;
    unsigned long long b_seed = 1;
    bool b_no_mc = false;
    CLI::App* bound =
        app.add_subcommand("bound", "check one inequality case");
    bound->add_option("--kind", b_kind, "inequality kind")->required();
    bound->add_option("--sigma", b_sigma, "correlation JSON file")
        ->required();
    bound->add_option("--alpha", b_alpha, "comma-separated exponents")
        ->required();
    bound->add_option("--split", b_split,
                      "index splitting the axes for split-product kinds");
    bound->add_option("--tol", b_tol, "absolute slack tolerance");
    bound->add_option("--samples", b_samples,
                      "Monte Carlo sample count for fallback");
    bound->add_option("--seed", b_seed, "Monte Carlo seed");
    bound->add_flag("--no-mc", b_no_mc,
                    "disable the Monte Carlo fallback (skips instead)");

    // verify / sweep
    std::string s_config;
    std::string s_out;
    std::string s_format = "json";
    CLI::App* sweep = app.add_subcommand(
        "sweep", "run randomized checks for every configured kind");
    sweep->alias("verify");
    sweep->add_option("--config", s_config, "sweep configuration JSON file");
    sweep->add_option("--out", s_out,
                      "report path (omit to print to stdout)");
    sweep->add_option("--format", s_format, "report format")
        ->check(CLI::IsMember({"json", "csv"}));

    // hunt
    verifier::HuntOptions h;
    std::string h_out;
    std::string h_format = "json";
    CLI::App* hunt = app.add_subcommand(
        "hunt", "search for product-inequality counterexamples");
    hunt->add_option("--n", h.n, "dimension (must be 3)");
    hunt->add_option("--trials", h.trials, "number of random cases");
    hunt->add_option("--seed", h.master_seed, "master seed");
    hunt->add_option("--samples", h.mc_samples,
                     "Monte Carlo samples per case");
    hunt->add_option("--alpha-lo", h.alpha_lo, "exponent range lower end");
    hunt->add_option("--alpha-hi", h.alpha_hi, "exponent range upper end");
    hunt->add_option("--even-gap", h.even_gap,
                     "redraw exponents this close to an even integer");
    hunt->add_flag("--even-only", h.even_only,
                   "sample even integer exponents instead");
    hunt->add_option("--lhs-scale", h.lhs_scale,
                     "scale the estimate (self-test hook)");
    hunt->add_option("--out", h_out, "report path (omit to print to stdout)");
    hunt->add_option("--format", h_format, "report format")
        ->check(CLI::IsMember({"json", "csv"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (moment->parsed()) {
            return run_moment(m_sigma, m_alpha, m_method, m_samples, m_seed,
                              out);
        }
        if (bound->parsed()) {
            return run_bound(b_kind, b_sigma, b_alpha,
                             b_split >= 0 ? std::optional<int>(b_split)
                                          : std::nullopt,
                             b_tol, b_samples, b_seed, b_no_mc, out, err);
        }
        if (sweep->parsed()) {
            const verifier::SweepConfig cfg =
                s_config.empty()
                    ? verifier::SweepConfig{}
                    : verifier::SweepConfig::from_json(load_json(s_config));
            return emit(verifier::sweep(cfg), s_out, s_format, out, err);
        }
        // hunt
        const verifier::Report report = verifier::hunt_gpi(h);
        const int code = emit(report, h_out, h_format, out, err);
        if (code == 1) {
            err << "candidate violation confirmed; inspect the report\n";
        }
        return code;
    } catch (const DomainError& e) {
        err << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const CapabilityError& e) {
        err << "capability error: " << e.what() << '\n';
        return 3;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    }
}

}  // namespace gpi::cli
