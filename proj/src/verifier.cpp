#include "gpi/verifier.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>

#include "gpi/errors.hpp"
#include "gpi/moments.hpp"

namespace gpi::verifier {

namespace {

using bounds::InequalityCase;
using bounds::Kind;
using bounds::McOptions;
using linalg::Matrix;
using linalg::SymMatrix;
using linalg::Vec;
using moments::ExponentVector;
using moments::Method;

// splitmix64 finalizer: decorrelates sequential ids into case seeds.
unsigned long long mix(unsigned long long seed, unsigned long long i) {
    unsigned long long z =
        seed ^ (0x9E3779B97F4A7C15ULL * (i + 0x632BE59BD9B4E019ULL));
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Engine-order-stable uniforms and normals (no library distribution state).
double next_uniform(std::mt19937_64& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

double uniform_in(std::mt19937_64& eng, double lo, double hi) {
    return lo + (hi - lo) * next_uniform(eng);
}

int uniform_int(std::mt19937_64& eng, int lo, int hi) {
    const int span = hi - lo + 1;
    int k = lo + static_cast<int>(next_uniform(eng) * span);
    return k > hi ? hi : k;
}

double next_normal(std::mt19937_64& eng) {
    const double u1 = 1.0 - next_uniform(eng);
    const double u2 = next_uniform(eng);
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::acos(-1.0) * u2);
}

CorrelationMatrix gram_matrix(std::mt19937_64& eng, int n, bool nonneg) {
    SymMatrix last(n);
    for (int attempt = 0; attempt < 100; ++attempt) {
        const int cols = n + 3;
        Matrix w(n, cols);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < cols; ++j) {
                const double g = next_normal(eng);
                w.at(i, j) = nonneg ? std::abs(g) : g;
            }
        }
        for (int i = 0; i < n; ++i) {
            double nrm = 0.0;
            for (int j = 0; j < cols; ++j) nrm += w.at(i, j) * w.at(i, j);
            nrm = std::sqrt(nrm);
            for (int j = 0; j < cols; ++j) w.at(i, j) /= nrm;
        }
        SymMatrix s(n);
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k <= i; ++k) {
                double dot = 0.0;
                for (int j = 0; j < cols; ++j) dot += w.at(i, j) * w.at(k, j);
                s.set(i, k, i == k ? 1.0 : dot);
            }
        }
        last = s;
        try {
            return CorrelationMatrix(s);
        } catch (const NumericError&) {
            continue;
        }
    }
    return linalg::shrink_to_pd(last, 10.0);
}

AlphaGrid grid_for(const SweepConfig& cfg, Kind k) {
    const auto it = cfg.alpha_grids.find(bounds::kind_name(k));
    return it == cfg.alpha_grids.end() ? default_grid(k) : it->second;
}

struct NRange {
    int lo;
    int hi;
};

NRange kind_n_range(Kind k) {
    switch (k) {
        case Kind::thm1_1: return {2, 5};
        case Kind::thm1_2: return {2, 4};
        case Kind::remark_eq2: return {2, 4};
        case Kind::prop1_3: return {4, 4};
        case Kind::prop1_4: return {3, 3};
        case Kind::prop1_5: return {3, 3};
        case Kind::wei_a3: return {2, 3};
        case Kind::opposite_n2: return {2, 2};
        case Kind::gpi_n2: return {2, 2};
        case Kind::even_gpi_1_6: return {3, 3};
        case Kind::even_gpi_subset_1_7: return {2, 6};
    }
    return {2, 2};
}

std::string fmt(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

Json grid_json(const AlphaGrid& g) {
    Json j;
    j["neg_lo"] = g.neg_lo;
    j["neg_hi"] = g.neg_hi;
    j["pos_lo"] = g.pos_lo;
    j["pos_hi"] = g.pos_hi;
    return j;
}

}  // namespace

const char* family_name(MatrixFamily f) {
    switch (f) {
        case MatrixFamily::gram_normalized: return "gram_normalized";
        case MatrixFamily::equicorrelated: return "equicorrelated";
        case MatrixFamily::near_singular: return "near_singular";
        case MatrixFamily::nonneg_entries: return "nonneg_entries";
    }
    return "unknown";
}

MatrixFamily family_from_string(const std::string& name) {
    for (MatrixFamily f :
         {MatrixFamily::gram_normalized, MatrixFamily::equicorrelated,
          MatrixFamily::near_singular, MatrixFamily::nonneg_entries}) {
        if (name == family_name(f)) return f;
    }
    throw DomainError("unknown matrix family \"" + name +
                      "\"; valid families: gram_normalized equicorrelated "
                      "near_singular nonneg_entries");
}

CorrelationMatrix random_correlation(int n, MatrixFamily family,
                                     unsigned long long seed) {
    if (n < 2) throw DomainError("random_correlation requires n >= 2");
    std::mt19937_64 eng(seed);
    switch (family) {
        case MatrixFamily::gram_normalized:
            return gram_matrix(eng, n, false);
        case MatrixFamily::nonneg_entries:
            return gram_matrix(eng, n, true);
        case MatrixFamily::equicorrelated: {
            const double lo = -1.0 / (n - 1) + 0.01;
            const double rho = uniform_in(eng, lo, 0.99);
            SymMatrix s(n);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j <= i; ++j) s.set(i, j, i == j ? 1.0 : rho);
            }
            return CorrelationMatrix(s);
        }
        case MatrixFamily::near_singular: {
            Vec u(static_cast<size_t>(n));
            for (double& x : u) x = next_normal(eng);
            SymMatrix s(n);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < i; ++j) {
                    const double d =
                        std::sqrt((u[static_cast<size_t>(i)] *
                                       u[static_cast<size_t>(i)] +
                                   1e-6) *
                                  (u[static_cast<size_t>(j)] *
                                       u[static_cast<size_t>(j)] +
                                   1e-6));
                    s.set(i, j,
                          u[static_cast<size_t>(i)] *
                              u[static_cast<size_t>(j)] / d);
                }
                s.set(i, i, 1.0);
            }
            const double m =
                std::exp(uniform_in(eng, std::log(10.0), std::log(1e4)));
            return linalg::shrink_to_pd(s, m);
        }
    }
    throw DomainError("unhandled matrix family");
}

AlphaGrid default_grid(Kind k) {
    AlphaGrid g;
    if (k == Kind::prop1_5) g.pos_hi = 2.0;
    return g;
}

SweepConfig SweepConfig::from_json(const Json& j) {
    SweepConfig cfg;
    if (!j.is_object()) throw DomainError("config must be a JSON object");
    for (const auto& item : j.items()) {
        const std::string& key = item.key();
        if (key != "kinds" && key != "n_range" && key != "trials" &&
            key != "matrix_family" && key != "master_seed" &&
            key != "tolerance_abs" && key != "mc_fallback" &&
            key != "mc_samples" && key != "alpha_grids" &&
            key != "force_mc" && key != "corruption") {
            throw DomainError("unknown config key \"" + key + "\"");
        }
    }
    if (j.contains("kinds")) {
        cfg.kinds.clear();
        for (const auto& name : j.at("kinds")) {
            cfg.kinds.push_back(
                bounds::kind_from_string(name.get<std::string>()));
        }
        if (cfg.kinds.empty()) throw DomainError("kinds must be nonempty");
    }
    if (j.contains("n_range")) {
        const auto& r = j.at("n_range");
        if (!r.is_array() || r.size() != 2) {
            throw DomainError("n_range must be [min, max]");
        }
        cfg.n_min = r.at(0).get<int>();
        cfg.n_max = r.at(1).get<int>();
        if (cfg.n_min < 2 || cfg.n_min > cfg.n_max) {
            throw DomainError("n_range must satisfy 2 <= min <= max");
        }
    }
    if (j.contains("trials")) {
        cfg.trials = j.at("trials").get<long long>();
        if (cfg.trials < 0) throw DomainError("trials must be >= 0");
    }
    if (j.contains("matrix_family")) {
        cfg.family =
            family_from_string(j.at("matrix_family").get<std::string>());
    }
    if (j.contains("master_seed")) {
        cfg.master_seed = j.at("master_seed").get<unsigned long long>();
    }
    if (j.contains("tolerance_abs")) {
        cfg.tolerance_abs = j.at("tolerance_abs").get<double>();
        if (!(cfg.tolerance_abs > 0.0)) {
            throw DomainError("tolerance_abs must be positive");
        }
    }
    if (j.contains("mc_fallback")) {
        cfg.mc_fallback = j.at("mc_fallback").get<bool>();
    }
    if (j.contains("mc_samples")) {
        cfg.mc_samples = j.at("mc_samples").get<long long>();
        if (cfg.mc_samples < 2) throw DomainError("mc_samples must be >= 2");
    }
    if (j.contains("alpha_grids")) {
        for (const auto& item : j.at("alpha_grids").items()) {
            const Kind k = bounds::kind_from_string(item.key());
            AlphaGrid g = default_grid(k);
            const Json& gj = item.value();
            for (const auto& f : gj.items()) {
                if (f.key() == "neg_lo") g.neg_lo = f.value().get<double>();
                else if (f.key() == "neg_hi") g.neg_hi = f.value().get<double>();
                else if (f.key() == "pos_lo") g.pos_lo = f.value().get<double>();
                else if (f.key() == "pos_hi") g.pos_hi = f.value().get<double>();
                else throw DomainError("unknown alpha_grids key \"" +
                                       f.key() + "\"");
            }
            if (!(g.neg_lo > 0.0) || !(g.neg_hi < 1.0) ||
                g.neg_lo > g.neg_hi || !(g.pos_lo > 0.0) ||
                g.pos_lo > g.pos_hi) {
                throw DomainError("alpha_grids ranges are invalid for " +
                                  item.key());
            }
            cfg.alpha_grids[item.key()] = g;
        }
    }
    if (j.contains("force_mc")) cfg.force_mc = j.at("force_mc").get<bool>();
    if (j.contains("corruption")) {
        const std::string c = j.at("corruption").get<std::string>();
        if (c == "none") cfg.corruption = Corruption::none;
        else if (c == "strict_15") cfg.corruption = Corruption::strict_15;
        else throw DomainError("corruption must be none or strict_15");
    }
    return cfg;
}

Json SweepConfig::to_json() const {
    Json j;
    Json names = Json::array();
    for (Kind k : kinds) names.push_back(bounds::kind_name(k));
    j["kinds"] = names;
    j["n_range"] = Json::array({n_min, n_max});
    j["trials"] = trials;
    j["matrix_family"] = family_name(family);
    j["master_seed"] = master_seed;
    j["tolerance_abs"] = tolerance_abs;
    j["mc_fallback"] = mc_fallback;
    j["mc_samples"] = mc_samples;
    if (!alpha_grids.empty()) {
        Json grids;
        for (const auto& [name, g] : alpha_grids) grids[name] = grid_json(g);
        j["alpha_grids"] = grids;
    }
    if (force_mc) j["force_mc"] = true;
    if (corruption == Corruption::strict_15) j["corruption"] = "strict_15";
    return j;
}

InequalityCase sample_case(Kind k, const SweepConfig& cfg,
                           unsigned long long case_seed) {
    std::mt19937_64 eng(case_seed);
    const AlphaGrid g = grid_for(cfg, k);
    const NRange kr = kind_n_range(k);
    int lo = kr.lo > cfg.n_min ? kr.lo : cfg.n_min;
    int hi = kr.hi < cfg.n_max ? kr.hi : cfg.n_max;
    if (lo > hi) {
        lo = kr.lo;
        hi = kr.hi;
    }
    const int n = uniform_int(eng, lo, hi);

    const auto mag = [&]() { return uniform_in(eng, g.neg_lo, g.neg_hi); };
    const auto pos = [&]() { return uniform_in(eng, g.pos_lo, g.pos_hi); };

    std::vector<double> alphas;
    std::optional<int> split;
    switch (k) {
        case Kind::thm1_1:
            alphas.push_back(-mag());
            for (int i = 1; i < n; ++i) alphas.push_back(2.0);
            break;
        case Kind::thm1_2:
            for (int i = 0; i < n - 1; ++i) alphas.push_back(-mag());
            alphas.push_back(pos());
            break;
        case Kind::remark_eq2:
            for (int i = 0; i < n - 1; ++i) alphas.push_back(-mag());
            alphas.push_back(1.0);
            break;
        case Kind::prop1_3: {
            alphas.push_back(-mag());
            for (;;) {
                std::vector<double> evens;
                long long half = 0;
                for (int i = 0; i < 3; ++i) {
                    const double e = 2.0 * uniform_int(eng, 1, 3);
                    evens.push_back(e);
                    half += std::llround(e) / 2;
                }
                if (half <= 8) {
                    alphas.insert(alphas.end(), evens.begin(), evens.end());
                    break;
                }
            }
            break;
        }
        case Kind::prop1_4:
            alphas = {-mag(), pos(), pos()};
            break;
        case Kind::prop1_5:
            alphas = {-mag(), -mag(), pos()};
            break;
        case Kind::wei_a3:
            for (int i = 0; i < n; ++i) alphas.push_back(-mag());
            split = uniform_int(eng, 1, n - 1);
            break;
        case Kind::opposite_n2:
            alphas = {-mag(), pos()};
            break;
        case Kind::gpi_n2:
            alphas = {pos(), pos()};
            break;
        case Kind::even_gpi_1_6:
        case Kind::even_gpi_subset_1_7: {
            const int top = k == Kind::even_gpi_1_6 ? 3 : 2;
            for (;;) {
                std::vector<double> evens;
                long long half = 0;
                for (int i = 0; i < n; ++i) {
                    const double e = 2.0 * uniform_int(eng, 1, top);
                    evens.push_back(e);
                    half += std::llround(e) / 2;
                }
                if (half <= 8) {
                    alphas = evens;
                    break;
                }
            }
            if (k == Kind::even_gpi_subset_1_7) {
                split = uniform_int(eng, 1, n - 1);
            }
            break;
        }
    }

    const MatrixFamily family = k == Kind::even_gpi_subset_1_7
                                    ? MatrixFamily::nonneg_entries
                                    : cfg.family;
    CorrelationMatrix sigma =
        random_correlation(n, family, mix(case_seed, 1));
    return InequalityCase{k, sigma, ExponentVector::from_list(alphas), split};
}

CaseResult check_case(const InequalityCase& c, double tolerance_abs,
                      const McOptions& mc, Corruption corruption) {
    CaseResult r;
    r.kind = bounds::kind_name(c.kind);
    r.sigma = c.sigma.sym();
    r.alphas = c.alphas.alphas();
    r.split = c.split;
    r.seed = mc.seed;
    bounds::BoundEval be;
    try {
        be = bounds::evaluate(c, mc);
    } catch (const CapabilityError& e) {
        r.status = CaseStatus::skip;
        r.note = e.what();
        return r;
    } catch (const NumericError& e) {
        r.status = CaseStatus::skip;
        r.note = std::string("numeric failure: ") + e.what();
        return r;
    }
    r.lhs = be.lhs.value;
    r.method = moments::method_name(be.lhs.method);
    const double werr = be.lhs.method == Method::monte_carlo
                            ? 4.0 * be.lhs.err
                            : be.lhs.err;
    r.err = werr + be.side_err;
    r.lower = be.lower;
    r.upper = be.upper;
    if (corruption == Corruption::strict_15) {
        if (r.lower) *r.lower *= 1.5;
        if (r.upper) *r.upper /= 1.5;
    }
    bool ok = true;
    if (r.lower) {
        r.slack_lower = r.lhs - *r.lower;
        ok = ok && *r.slack_lower >= -(r.err + tolerance_abs);
    }
    if (r.upper) {
        r.slack_upper = *r.upper - r.lhs;
        ok = ok && *r.slack_upper >= -(r.err + tolerance_abs);
    }
    r.status = ok ? CaseStatus::pass : CaseStatus::fail;
    return r;
}

Report sweep(const SweepConfig& cfg) {
    if (cfg.trials < 0) throw DomainError("trials must be >= 0");
    if (!(cfg.tolerance_abs > 0.0)) {
        throw DomainError("tolerance_abs must be positive");
    }
    Report report;
    report.config = cfg.to_json();
    long long case_id = 0;
    for (Kind k : cfg.kinds) {
        for (long long t = 0; t < cfg.trials; ++t, ++case_id) {
            const unsigned long long case_seed =
                mix(cfg.master_seed, static_cast<unsigned long long>(case_id));
            const InequalityCase c = sample_case(k, cfg, case_seed);
            McOptions mc;
            mc.samples = cfg.mc_samples;
            mc.seed = mix(case_seed, 2);
            mc.enabled = cfg.mc_fallback;
            mc.force = cfg.force_mc;
            CaseResult r = check_case(c, cfg.tolerance_abs, mc,
                                      cfg.corruption);
            r.case_id = case_id;
            report.results.push_back(std::move(r));
        }
    }
    report.summary.total = static_cast<long long>(report.results.size());
    for (const CaseResult& r : report.results) {
        switch (r.status) {
            case CaseStatus::pass: ++report.summary.passed; break;
            case CaseStatus::fail: ++report.summary.failed; break;
            case CaseStatus::skip: ++report.summary.skipped; break;
        }
    }
    return report;
}

Report hunt_gpi(const HuntOptions& opt) {
    if (opt.n != 3) {
        throw DomainError("the conjecture hunter is restricted to n = 3");
    }
    if (opt.trials < 0) throw DomainError("trials must be >= 0");
    if (!(opt.alpha_lo > 0.0) || !(opt.alpha_lo < opt.alpha_hi)) {
        throw DomainError("alpha range must satisfy 0 < lo < hi");
    }
    Report report;
    Json cfg;
    cfg["mode"] = "hunt";
    cfg["n"] = opt.n;
    cfg["trials"] = opt.trials;
    cfg["master_seed"] = opt.master_seed;
    cfg["mc_samples"] = opt.mc_samples;
    cfg["alpha_lo"] = opt.alpha_lo;
    cfg["alpha_hi"] = opt.alpha_hi;
    cfg["even_gap"] = opt.even_gap;
    cfg["even_only"] = opt.even_only;
    if (opt.lhs_scale != 1.0) cfg["lhs_scale"] = opt.lhs_scale;
    report.config = cfg;

    for (long long t = 0; t < opt.trials; ++t) {
        const unsigned long long case_seed =
            mix(opt.master_seed, static_cast<unsigned long long>(t));
        std::mt19937_64 eng(case_seed);
        std::vector<double> alphas;
        for (int i = 0; i < opt.n; ++i) {
            if (opt.even_only) {
                alphas.push_back(2.0 * uniform_int(eng, 1, 2));
                continue;
            }
            for (;;) {
                const double a = uniform_in(eng, opt.alpha_lo, opt.alpha_hi);
                const double gap =
                    std::abs(a - 2.0 * std::round(a / 2.0));
                if (gap >= opt.even_gap) {
                    alphas.push_back(a);
                    break;
                }
            }
        }
        const CorrelationMatrix sigma = random_correlation(
            opt.n, MatrixFamily::gram_normalized, mix(case_seed, 1));
        const ExponentVector ev = ExponentVector::from_list(alphas);
        double rhs = 1.0;
        for (double a : alphas) rhs *= moments::abs_moment_1d(a, 1.0);

        CaseResult r;
        r.case_id = t;
        r.kind = "hunt_gpi";
        r.sigma = sigma.sym();
        r.alphas = alphas;
        r.method = moments::method_name(Method::monte_carlo);
        r.lower = rhs;
        r.seed = mix(case_seed, 2);

        moments::MomentEstimate est = moments::mc_mixed_moment(
            sigma.sym(), ev, opt.mc_samples, r.seed);
        est.value *= opt.lhs_scale;
        est.err *= opt.lhs_scale;
        r.lhs = est.value;
        r.err = 6.0 * est.err;
        r.slack_lower = est.value - rhs;
        if (est.value + 6.0 * est.err < rhs) {
            // candidate: re-examine at 100x samples before reporting
            moments::MomentEstimate retest = moments::mc_mixed_moment(
                sigma.sym(), ev, 100 * opt.mc_samples, mix(case_seed, 3));
            retest.value *= opt.lhs_scale;
            retest.err *= opt.lhs_scale;
            r.lhs = retest.value;
            r.err = 6.0 * retest.err;
            r.slack_lower = retest.value - rhs;
            if (retest.value + 6.0 * retest.err < rhs) {
                r.status = CaseStatus::fail;
                r.note = "candidate violation confirmed at 100x samples";
            } else {
                r.status = CaseStatus::pass;
                r.note = "candidate cleared at 100x samples";
            }
        } else {
            r.status = CaseStatus::pass;
        }
        report.results.push_back(std::move(r));
    }
    report.summary.total = static_cast<long long>(report.results.size());
    for (const CaseResult& r : report.results) {
        switch (r.status) {
            case CaseStatus::pass: ++report.summary.passed; break;
            case CaseStatus::fail: ++report.summary.failed; break;
            case CaseStatus::skip: ++report.summary.skipped; break;
        }
    }
    return report;
}

Json case_json(const CaseResult& c) {
    Json row;
    row["case_id"] = c.case_id;
    row["kind"] = c.kind;
    row["sigma"] = c.sigma.to_json();
    row["alphas"] = c.alphas;
    if (c.split) row["split"] = *c.split;
    row["lhs"] = c.lhs;
    row["lower"] = c.lower ? Json(*c.lower) : Json(nullptr);
    row["upper"] = c.upper ? Json(*c.upper) : Json(nullptr);
    row["slack_lower"] = c.slack_lower ? Json(*c.slack_lower) : Json(nullptr);
    row["slack_upper"] = c.slack_upper ? Json(*c.slack_upper) : Json(nullptr);
    row["method"] = c.method;
    row["err"] = c.err;
    row["pass"] = c.status == CaseStatus::skip
                      ? Json(nullptr)
                      : Json(c.status == CaseStatus::pass);
    if (!c.note.empty()) row["note"] = c.note;
    row["seed"] = c.seed;
    return row;
}

Json report_json(const Report& r) {
    Json j;
    j["config"] = r.config;
    Json rows = Json::array();
    for (const CaseResult& c : r.results) rows.push_back(case_json(c));
    j["results"] = std::move(rows);
    Json s;
    s["total"] = r.summary.total;
    s["passed"] = r.summary.passed;
    s["failed"] = r.summary.failed;
    s["skipped"] = r.summary.skipped;
    j["summary"] = std::move(s);
    return j;
}

std::string report_csv(const Report& r) {
    std::ostringstream out;
    out << "case_id,kind,n,alphas,lhs,lower,upper,slack_lower,slack_upper,"
           "method,err,pass,seed\n";
    for (const CaseResult& c : r.results) {
        out << c.case_id << ',' << c.kind << ',' << c.alphas.size() << ',';
        for (size_t i = 0; i < c.alphas.size(); ++i) {
            if (i > 0) out << ';';
            out << fmt(c.alphas[i]);
        }
        out << ',' << fmt(c.lhs) << ',';
        if (c.lower) out << fmt(*c.lower);
        out << ',';
        if (c.upper) out << fmt(*c.upper);
        out << ',';
        if (c.slack_lower) out << fmt(*c.slack_lower);
        out << ',';
        if (c.slack_upper) out << fmt(*c.slack_upper);
        out << ',' << c.method << ',' << fmt(c.err) << ',';
        switch (c.status) {
            case CaseStatus::pass: out << "true"; break;
            case CaseStatus::fail: out << "false"; break;
            case CaseStatus::skip: out << "skip"; break;
        }
        out << ',' << c.seed << '\n';
    }
    return out.str();
}

void emit_report(const Report& r, ReportFormat format,
                 const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DomainError("cannot open report output path: " + path);
    }
    if (format == ReportFormat::json) {
        out << report_json(r).dump(2) << '\n';
    } else {
        out << report_csv(r);
    }
    out.flush();
    if (!out) throw DomainError("failed writing report to: " + path);
}

}  // namespace gpi::verifier
