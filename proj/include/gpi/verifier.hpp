#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gpi/bounds.hpp"
#include "gpi/linalg.hpp"

namespace gpi::verifier {

using linalg::CorrelationMatrix;
using linalg::Json;

// Random correlation generators:
//   gram_normalized  Gram matrix of independent unit-normalized Gaussian
//                    rows (the general-position workhorse)
//   equicorrelated   constant off-diagonal drawn from the PD range
//   near_singular    normalized rank-one perturbation pulled just inside
//                    the PD cone
//   nonneg_entries   Gram matrix of folded-normal rows; every entry >= 0
enum class MatrixFamily {
    gram_normalized,
    equicorrelated,
    near_singular,
    nonneg_entries,
};

const char* family_name(MatrixFamily f);
MatrixFamily family_from_string(const std::string& name);

// Deterministic given (n, family, seed). Resamples on a positive
// definiteness failure (at most 100 attempts) and then falls back to
// shrinking toward the identity, so it never throws for n >= 2.
CorrelationMatrix random_correlation(int n, MatrixFamily family,
                                     unsigned long long seed);

// Exponent sampling ranges for one kind. Negative exponents are drawn as
// -U(neg_lo, neg_hi); continuous positive exponents as U(pos_lo, pos_hi).
// Kinds with fixed or integer exponents ignore the irrelevant fields. The
// defaults keep 1e-3 away from every domain boundary.
struct AlphaGrid {
    double neg_lo = 1e-3;
    double neg_hi = 0.999;
    double pos_lo = 1e-3;
    double pos_hi = 3.0;
};

// Grid actually used for a kind: the built-in default overlaid with any
// configured override. The prop1_5 default caps the positive exponent at 2,
// the range on which its stated lower bound is reliable.
AlphaGrid default_grid(bounds::Kind k);

// Self-test corruption of the computed bounds: strict_15 moves every bound
// against the inequality by a factor 1.5, so near-equality cases must fail.
// Proves the checker is not vacuous; never enabled in shipping configs.
enum class Corruption { none, strict_15 };

struct SweepConfig {
    std::vector<bounds::Kind> kinds = bounds::all_kinds();
    int n_min = 2;
    int n_max = 5;
    long long trials = 60;
    MatrixFamily family = MatrixFamily::gram_normalized;
    unsigned long long master_seed = 20260816ULL;
    double tolerance_abs = 1e-7;
    bool mc_fallback = true;
    long long mc_samples = 200000;
    std::map<std::string, AlphaGrid> alpha_grids;  // per-kind overrides
    // Testing knobs (absent from shipped configs, echoed when set).
    bool force_mc = false;
    Corruption corruption = Corruption::none;

    static SweepConfig from_json(const Json& j);
    Json to_json() const;
};

enum class CaseStatus { pass, fail, skip };

struct CaseResult {
    long long case_id = 0;
    std::string kind;
    linalg::SymMatrix sigma = linalg::SymMatrix(1);
    std::vector<double> alphas;
    std::optional<int> split;
    double lhs = 0.0;
    std::optional<double> lower;
    std::optional<double> upper;
    std::optional<double> slack_lower;  // lhs - lower
    std::optional<double> slack_upper;  // upper - lhs
    std::string method;
    // Numeric allowance used for the verdict (widened MC error plus bound
    // side error); the absolute tolerance is added on top.
    double err = 0.0;
    CaseStatus status = CaseStatus::skip;
    std::string note;
    unsigned long long seed = 0;

    bool passed() const { return status == CaseStatus::pass; }
};

struct Summary {
    long long total = 0;
    long long passed = 0;
    long long failed = 0;
    long long skipped = 0;
};

struct Report {
    Json config;
    std::vector<CaseResult> results;
    Summary summary;
};

// Draws a complete case for the kind from the per-case seed: the dimension,
// the correlation matrix, the exponents, and the split where applicable.
bounds::InequalityCase sample_case(bounds::Kind k, const SweepConfig& cfg,
                                   unsigned long long case_seed);

// Evaluates one case and applies the tolerance policy: every applicable
// slack must be >= -(err + tolerance_abs). Capability gaps and quadrature
// convergence failures are recorded as skips, never silently dropped.
CaseResult check_case(const bounds::InequalityCase& c, double tolerance_abs,
                      const bounds::McOptions& mc = {},
                      Corruption corruption = Corruption::none);

// One CaseResult per (kind, trial), seeds derived per case from the master
// seed; identical configs produce byte-identical reports. trials = 0 yields
// an empty report.
Report sweep(const SweepConfig& cfg);

// Conjecture hunter: samples positive exponents away from the proved even
// integers, estimates the joint moment by MC, and flags any case whose
// estimate sits more than six standard errors below the marginal product.
// Flagged cases are re-tested at 100x samples before they are reported as
// violations.
struct HuntOptions {
    int n = 3;
    long long trials = 1000;
    unsigned long long master_seed = 1;
    long long mc_samples = 200000;
    double alpha_lo = 0.1;
    double alpha_hi = 4.0;
    // Exponents closer than this to{2, 4, ...} are redrawn.
    double even_gap = 0.05;
    // Sample even integers instead (the proved region; expects no flags).
    bool even_only = false;
    // Self-test hook: scales the MC estimate to fake a violation.
    double lhs_scale = 1.0;
};

Report hunt_gpi(const HuntOptions& opt);

// Report serialization. JSON: {"config": ..., "results": [...],
// "summary": {"total", "passed", "failed", "skipped"}}. CSV columns:
// case_id, kind, n, alphas, lhs, lower, upper, slack_lower, slack_upper,
// method, err, pass, seed. No timestamps anywhere, so identical runs give
// identical bytes.
Json case_json(const CaseResult& c);
Json report_json(const Report& r);
std::string report_csv(const Report& r);
enum class ReportFormat { json, csv };
void emit_report(const Report& r, ReportFormat format,
                 const std::string& path);

}  // namespace gpi::verifier
