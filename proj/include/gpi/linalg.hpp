#pragma once

// Dense symmetric-matrix kernel: Cholesky, determinants, block inverses via
// Schur complements, and the small identities the moment reductions rely on.
// Dimensions stay tiny (n <= 12), so everything is plain dense arithmetic.

#include "gpi/errors.hpp"
#include "json.hpp"

#include <vector>

namespace gpi::linalg {

using Vec = std::vector<double>;
using Json = nlohmann::ordered_json;

// General dense matrix, row-major. Used for non-symmetric intermediates
// (off-diagonal blocks, I + 2TS products).
struct Matrix {
    int rows = 0;
    int cols = 0;
    Vec data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

    double& at(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
    double at(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }

    static Matrix identity(int n);
};

Matrix matmul(const Matrix& x, const Matrix& y);
Matrix transpose(const Matrix& x);
Vec matvec(const Matrix& x, const Vec& v);
double dot(const Vec& a, const Vec& b);

// Symmetric matrix with full row-major storage; set() writes both triangles
// so the stored array is symmetric exactly.
class SymMatrix {
public:
    explicit SymMatrix(int n);

    static SymMatrix identity(int n);
    // Validates symmetry of the input to 1e-12 (relative to the entry scale).
    static SymMatrix from_rows(const std::vector<std::vector<double>>& rows);
    // Accepts a computed dense matrix, validating symmetry to `tol` and
    // storing the symmetrized average.
    static SymMatrix from_dense(const Matrix& m, double tol);
    // Schema {"n": int, "rows": [[...], ...]}.
    static SymMatrix from_json(const Json& j);

    int size() const { return n_; }
    double operator()(int i, int j) const {
        return a_[static_cast<size_t>(i) * n_ + j];
    }
    void set(int i, int j, double v);
    Matrix dense() const;
    Json to_json() const;

private:
    int n_;
    Vec a_;
};

// Unit-diagonal positive definite symmetric matrix. The constructor
// validates: diagonal within 1e-12 of 1, off-diagonals in [-1, 1], and
// positive definiteness via Cholesky.
class CorrelationMatrix {
public:
    explicit CorrelationMatrix(const SymMatrix& s);

    static CorrelationMatrix from_rows(const std::vector<std::vector<double>>& rows);
    static CorrelationMatrix from_json(const Json& j);

    const SymMatrix& sym() const { return s_; }
    int size() const { return s_.size(); }
    double operator()(int i, int j) const { return s_(i, j); }

private:
    SymMatrix s_;
};

// Lower-triangular factor with positive diagonal; L L' reconstructs the
// source with max-abs residual <= 1e-12 * n.
struct CholeskyFactor {
    int n = 0;
    Vec lower;  // row-major, entries above the diagonal are zero

    double at(int i, int j) const {
        return lower[static_cast<size_t>(i) * n + j];
    }
    Vec diag() const;
    // y = L z (used to map iid normals onto the target covariance).
    Vec apply(const Vec& z) const;
    SymMatrix reconstruct() const;
    // Solve (L L') x = b by forward/back substitution.
    Vec solve(const Vec& b) const;
};

// Throws NotPositiveDefinite if any pivot is <= 1e-14.
CholeskyFactor cholesky(const SymMatrix& s);

SymMatrix inverse_spd(const SymMatrix& s);
Vec solve_spd(const SymMatrix& s, const Vec& b);

// Determinant: Cholesky when PD, LU with partial pivoting otherwise.
double det_sym(const SymMatrix& s);
// Determinant of a general square matrix (consumes its argument).
double lu_det(Matrix m);

// Two-by-two block view of a symmetric matrix: [[A, B], [C, D]] with
// A = leading k x k block and C = B' for symmetric sources.
struct BlockPartition {
    int k = 0;
    SymMatrix a;
    Matrix b;
    Matrix c;
    SymMatrix d;

    static BlockPartition split(const SymMatrix& s, int k);
};

// Inverse assembled around the Schur complement D - C A^{-1} B.
SymMatrix block_inverse_lower(const BlockPartition& p);
// Inverse assembled around the Schur complement A - B D^{-1} C.
SymMatrix block_inverse_upper(const BlockPartition& p);

// For S partitioned as [[S1, t], [t', 1]] (unit last diagonal entry),
// returns S1 - t t' and certifies it positive definite.
SymMatrix lemma_2_3_schur(const CorrelationMatrix& s);

// det(I_n + 2 T Sigma) with T = diag(t_diag), last entry zero, reduces to
// det(I_{n-1} + 2 T1 Sigma1) over the leading blocks. Computes both sides,
// asserts agreement to 1e-10 relative, returns the reduced value.
double sylvester_reduce(const CorrelationMatrix& sigma, const Vec& t_diag);

// (S + I/m) / (1 + 1/m): pulls a unit-diagonal PSD matrix strictly inside
// the PD cone; m -> infinity recovers S.
CorrelationMatrix shrink_to_pd(const SymMatrix& s, double m);

// Rescale a covariance matrix with positive diagonal to unit diagonal.
CorrelationMatrix correlation_of(const SymMatrix& cov);

} // namespace gpi::linalg
