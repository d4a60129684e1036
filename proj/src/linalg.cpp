#include "gpi/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gpi::linalg {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw DomainError(msg);
}

std::string index_pair(int i, int j) {
    std::ostringstream os;
    os << "(" << i << "," << j << ")";
    return os.str();
}

} // namespace

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

Matrix matmul(const Matrix& x, const Matrix& y) {
    require(x.cols == y.rows, "matmul: inner dimensions differ");
    Matrix r(x.rows, y.cols);
    for (int i = 0; i < x.rows; ++i) {
        for (int k = 0; k < x.cols; ++k) {
            const double xik = x.at(i, k);
            if (xik == 0.0) continue;
            for (int j = 0; j < y.cols; ++j) {
                r.at(i, j) += xik * y.at(k, j);
            }
        }
    }
    return r;
}

Matrix transpose(const Matrix& x) {
    Matrix r(x.cols, x.rows);
    for (int i = 0; i < x.rows; ++i) {
        for (int j = 0; j < x.cols; ++j) r.at(j, i) = x.at(i, j);
    }
    return r;
}

Vec matvec(const Matrix& x, const Vec& v) {
    require(x.cols == static_cast<int>(v.size()), "matvec: dimension mismatch");
    Vec r(x.rows, 0.0);
    for (int i = 0; i < x.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < x.cols; ++j) s += x.at(i, j) * v[j];
        r[i] = s;
    }
    return r;
}

double dot(const Vec& a, const Vec& b) {
    require(a.size() == b.size(), "dot: dimension mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

SymMatrix::SymMatrix(int n) : n_(n), a_(static_cast<size_t>(n) * n, 0.0) {
    require(n >= 1, "SymMatrix: dimension must be >= 1");
}

SymMatrix SymMatrix::identity(int n) {
    SymMatrix s(n);
    for (int i = 0; i < n; ++i) s.set(i, i, 1.0);
    return s;
}

void SymMatrix::set(int i, int j, double v) {
    a_[static_cast<size_t>(i) * n_ + j] = v;
    a_[static_cast<size_t>(j) * n_ + i] = v;
}

SymMatrix SymMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
    const int n = static_cast<int>(rows.size());
    require(n >= 1, "SymMatrix: empty row list");
    SymMatrix s(n);
    for (int i = 0; i < n; ++i) {
        require(static_cast<int>(rows[i].size()) == n,
                "SymMatrix: rows must form a square matrix");
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            const double scale =
                std::max(1.0, std::abs(rows[i][j]) + std::abs(rows[j][i]));
            if (std::abs(rows[i][j] - rows[j][i]) > 1e-12 * scale) {
                throw DomainError("SymMatrix: input not symmetric at " +
                                  index_pair(i, j));
            }
            s.set(i, j, 0.5 * (rows[i][j] + rows[j][i]));
        }
    }
    return s;
}

SymMatrix SymMatrix::from_dense(const Matrix& m, double tol) {
    require(m.rows == m.cols, "SymMatrix: dense input not square");
    SymMatrix s(m.rows);
    for (int i = 0; i < m.rows; ++i) {
        for (int j = i; j < m.rows; ++j) {
            const double scale =
                std::max(1.0, std::abs(m.at(i, j)) + std::abs(m.at(j, i)));
            if (std::abs(m.at(i, j) - m.at(j, i)) > tol * scale) {
                std::ostringstream os;
                os << "SymMatrix: computed matrix asymmetric at "
                   << index_pair(i, j) << ": " << m.at(i, j) << " vs "
                   << m.at(j, i);
                throw NumericError(os.str());
            }
            s.set(i, j, 0.5 * (m.at(i, j) + m.at(j, i)));
        }
    }
    return s;
}

Matrix SymMatrix::dense() const {
    Matrix m(n_, n_);
    m.data = a_;
    return m;
}

Json SymMatrix::to_json() const {
    Json j;
    j["n"] = n_;
    Json rows = Json::array();
    for (int i = 0; i < n_; ++i) {
        Json row = Json::array();
        for (int k = 0; k < n_; ++k) row.push_back((*this)(i, k));
        rows.push_back(std::move(row));
    }
    j["rows"] = std::move(rows);
    return j;
}

SymMatrix SymMatrix::from_json(const Json& j) {
    if (!j.is_object() || !j.contains("n") || !j.contains("rows")) {
        throw DomainError(
            "matrix JSON must be an object with fields \"n\" and \"rows\"");
    }
    const int n = j.at("n").get<int>();
    std::vector<std::vector<double>> rows;
    for (const auto& r : j.at("rows")) {
        rows.push_back(r.get<std::vector<double>>());
    }
    require(static_cast<int>(rows.size()) == n,
            "matrix JSON: \"n\" does not match the number of rows");
    return from_rows(rows);
}

CorrelationMatrix::CorrelationMatrix(const SymMatrix& s) : s_(s) {
    const int n = s.size();
    for (int i = 0; i < n; ++i) {
        if (std::abs(s(i, i) - 1.0) > 1e-12) {
            std::ostringstream os;
            os << "CorrelationMatrix: diagonal entry " << i << " is "
               << s(i, i) << ", expected 1";
            throw DomainError(os.str());
        }
        for (int j = i + 1; j < n; ++j) {
            if (std::abs(s(i, j)) > 1.0 + 1e-12) {
                throw DomainError(
                    "CorrelationMatrix: off-diagonal entry out of [-1,1] at " +
                    index_pair(i, j));
            }
        }
    }
    cholesky(s_);  // throws NotPositiveDefinite when it is not
}

CorrelationMatrix CorrelationMatrix::from_rows(
    const std::vector<std::vector<double>>& rows) {
    return CorrelationMatrix(SymMatrix::from_rows(rows));
}

CorrelationMatrix CorrelationMatrix::from_json(const Json& j) {
    return CorrelationMatrix(SymMatrix::from_json(j));
}

Vec CholeskyFactor::diag() const {
    Vec d(n);
    for (int i = 0; i < n; ++i) d[i] = at(i, i);
    return d;
}

Vec CholeskyFactor::apply(const Vec& z) const {
    require(static_cast<int>(z.size()) == n, "CholeskyFactor: size mismatch");
    Vec y(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j <= i; ++j) s += at(i, j) * z[j];
        y[i] = s;
    }
    return y;
}

SymMatrix CholeskyFactor::reconstruct() const {
    SymMatrix s(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double v = 0.0;
            for (int k = 0; k <= j; ++k) v += at(i, k) * at(j, k);
            s.set(i, j, v);
        }
    }
    return s;
}

Vec CholeskyFactor::solve(const Vec& b) const {
    require(static_cast<int>(b.size()) == n, "CholeskyFactor: size mismatch");
    Vec y(n);
    for (int i = 0; i < n; ++i) {
        double s = b[i];
        for (int j = 0; j < i; ++j) s -= at(i, j) * y[j];
        y[i] = s / at(i, i);
    }
    Vec x(n);
    for (int i = n - 1; i >= 0; --i) {
        double s = y[i];
        for (int j = i + 1; j < n; ++j) s -= at(j, i) * x[j];
        x[i] = s / at(i, i);
    }
    return x;
}

CholeskyFactor cholesky(const SymMatrix& s) {
    const int n = s.size();
    CholeskyFactor f;
    f.n = n;
    f.lower.assign(static_cast<size_t>(n) * n, 0.0);
    auto l = [&](int i, int j) -> double& {
        return f.lower[static_cast<size_t>(i) * n + j];
    };
    for (int j = 0; j < n; ++j) {
        double pivot = s(j, j);
        for (int k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
        if (!(pivot > 1e-14)) {
            std::ostringstream os;
            os << "matrix is not positive definite: Cholesky pivot " << pivot
               << " at index " << j;
            throw NotPositiveDefinite(os.str());
        }
        l(j, j) = std::sqrt(pivot);
        for (int i = j + 1; i < n; ++i) {
            double v = s(i, j);
            for (int k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
            l(i, j) = v / l(j, j);
        }
    }
    return f;
}

SymMatrix inverse_spd(const SymMatrix& s) {
    const CholeskyFactor f = cholesky(s);
    const int n = s.size();
    Matrix inv(n, n);
    Vec e(n, 0.0);
    for (int j = 0; j < n; ++j) {
        e[j] = 1.0;
        const Vec col = f.solve(e);
        e[j] = 0.0;
        for (int i = 0; i < n; ++i) inv.at(i, j) = col[i];
    }
    return SymMatrix::from_dense(inv, 1e-8);
}

Vec solve_spd(const SymMatrix& s, const Vec& b) {
    return cholesky(s).solve(b);
}

double lu_det(Matrix m) {
    require(m.rows == m.cols, "lu_det: matrix not square");
    const int n = m.rows;
    double det = 1.0;
    for (int j = 0; j < n; ++j) {
        int p = j;
        for (int i = j + 1; i < n; ++i) {
            if (std::abs(m.at(i, j)) > std::abs(m.at(p, j))) p = i;
        }
        if (m.at(p, j) == 0.0) return 0.0;
        if (p != j) {
            for (int k = 0; k < n; ++k) std::swap(m.at(p, k), m.at(j, k));
            det = -det;
        }
        det *= m.at(j, j);
        for (int i = j + 1; i < n; ++i) {
            const double r = m.at(i, j) / m.at(j, j);
            for (int k = j + 1; k < n; ++k) m.at(i, k) -= r * m.at(j, k);
        }
    }
    return det;
}

double det_sym(const SymMatrix& s) {
    try {
        const CholeskyFactor f = cholesky(s);
        double det = 1.0;
        for (int i = 0; i < f.n; ++i) det *= f.at(i, i) * f.at(i, i);
        return det;
    } catch (const NotPositiveDefinite&) {
        return lu_det(s.dense());
    }
}

BlockPartition BlockPartition::split(const SymMatrix& s, int k) {
    const int n = s.size();
    require(k >= 1 && k <= n - 1,
            "BlockPartition: split index must satisfy 1 <= k <= n-1");
    BlockPartition p{k, SymMatrix(k), Matrix(k, n - k), Matrix(n - k, k),
                     SymMatrix(n - k)};
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            if (j >= i) p.a.set(i, j, s(i, j));
        }
        for (int j = k; j < n; ++j) p.b.at(i, j - k) = s(i, j);
    }
    for (int i = k; i < n; ++i) {
        for (int j = 0; j < k; ++j) p.c.at(i - k, j) = s(i, j);
        for (int j = i; j < n; ++j) p.d.set(i - k, j - k, s(i, j));
    }
    return p;
}

namespace {

SymMatrix invert_or_rethrow(const SymMatrix& s, const std::string& which) {
    try {
        return inverse_spd(s);
    } catch (const NotPositiveDefinite& e) {
        throw NumericError("block inverse failed: " + which +
                           " is singular (" + e.what() + ")");
    }
}

Matrix negate(Matrix m) {
    for (double& v : m.data) v = -v;
    return m;
}

Matrix add(const Matrix& x, const Matrix& y) {
    require(x.rows == y.rows && x.cols == y.cols, "add: shape mismatch");
    Matrix r = x;
    for (size_t i = 0; i < r.data.size(); ++i) r.data[i] += y.data[i];
    return r;
}

Matrix sub(const Matrix& x, const Matrix& y) {
    require(x.rows == y.rows && x.cols == y.cols, "sub: shape mismatch");
    Matrix r = x;
    for (size_t i = 0; i < r.data.size(); ++i) r.data[i] -= y.data[i];
    return r;
}

SymMatrix assemble_inverse(const Matrix& tl, const Matrix& tr,
                           const Matrix& bl, const Matrix& br) {
    const int k = tl.rows;
    const int n = k + br.rows;
    Matrix full(n, n);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) full.at(i, j) = tl.at(i, j);
        for (int j = 0; j < n - k; ++j) full.at(i, k + j) = tr.at(i, j);
    }
    for (int i = 0; i < n - k; ++i) {
        for (int j = 0; j < k; ++j) full.at(k + i, j) = bl.at(i, j);
        for (int j = 0; j < n - k; ++j) full.at(k + i, k + j) = br.at(i, j);
    }
    return SymMatrix::from_dense(full, 1e-8);
}

} // namespace

SymMatrix block_inverse_lower(const BlockPartition& p) {
    const SymMatrix a_inv =
        invert_or_rethrow(p.a, "leading block A");
    const Matrix a_inv_m = a_inv.dense();
    // Schur complement of A: D - C A^{-1} B.
    const Matrix schur_m = sub(p.d.dense(), matmul(p.c, matmul(a_inv_m, p.b)));
    const SymMatrix schur = SymMatrix::from_dense(schur_m, 1e-8);
    const SymMatrix s_inv =
        invert_or_rethrow(schur, "Schur complement D - C A^{-1} B");
    const Matrix s_inv_m = s_inv.dense();

    const Matrix a_inv_b = matmul(a_inv_m, p.b);
    const Matrix tl =
        add(a_inv_m, matmul(a_inv_b, matmul(s_inv_m, transpose(a_inv_b))));
    const Matrix tr = negate(matmul(a_inv_b, s_inv_m));
    const Matrix bl = negate(matmul(s_inv_m, matmul(p.c, a_inv_m)));
    return assemble_inverse(tl, tr, bl, s_inv_m);
}

SymMatrix block_inverse_upper(const BlockPartition& p) {
    const SymMatrix d_inv =
        invert_or_rethrow(p.d, "trailing block D");
    const Matrix d_inv_m = d_inv.dense();
    // Schur complement of D: A - B D^{-1} C.
    const Matrix schur_m = sub(p.a.dense(), matmul(p.b, matmul(d_inv_m, p.c)));
    const SymMatrix schur = SymMatrix::from_dense(schur_m, 1e-8);
    const SymMatrix s_inv =
        invert_or_rethrow(schur, "Schur complement A - B D^{-1} C");
    const Matrix s_inv_m = s_inv.dense();

    const Matrix d_inv_c = matmul(d_inv_m, p.c);
    const Matrix tl = s_inv_m;
    const Matrix tr = negate(matmul(s_inv_m, transpose(d_inv_c)));
    const Matrix bl = negate(matmul(d_inv_c, s_inv_m));
    const Matrix br =
        add(d_inv_m, matmul(d_inv_c, matmul(s_inv_m, transpose(d_inv_c))));
    return assemble_inverse(tl, tr, bl, br);
}

SymMatrix lemma_2_3_schur(const CorrelationMatrix& s) {
    const int n = s.size();
    require(n >= 2, "lemma_2_3_schur: needs dimension >= 2");
    SymMatrix r(n - 1);
    for (int i = 0; i < n - 1; ++i) {
        for (int j = i; j < n - 1; ++j) {
            r.set(i, j, s(i, j) - s(i, n - 1) * s(j, n - 1));
        }
    }
    cholesky(r);  // certify positive definiteness; throws otherwise
    return r;
}

double sylvester_reduce(const CorrelationMatrix& sigma, const Vec& t_diag) {
    const int n = sigma.size();
    require(static_cast<int>(t_diag.size()) == n,
            "sylvester_reduce: tilt length must equal the dimension");
    for (double t : t_diag) {
        require(t >= 0.0, "sylvester_reduce: tilt entries must be >= 0");
    }
    require(t_diag[n - 1] == 0.0,
            "sylvester_reduce: last tilt entry must be exactly 0");

    // Full side: det(I_n + 2 T Sigma).
    Matrix full(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            full.at(i, j) = (i == j ? 1.0 : 0.0) + 2.0 * t_diag[i] * sigma(i, j);
        }
    }
    const double det_full = lu_det(std::move(full));

    // Reduced side: det(I_{n-1} + 2 T1 Sigma1) over the leading blocks.
    double det_reduced = 1.0;
    if (n >= 2) {
        Matrix red(n - 1, n - 1);
        for (int i = 0; i < n - 1; ++i) {
            for (int j = 0; j < n - 1; ++j) {
                red.at(i, j) =
                    (i == j ? 1.0 : 0.0) + 2.0 * t_diag[i] * sigma(i, j);
            }
        }
        det_reduced = lu_det(std::move(red));
    }

    const double scale = std::max({std::abs(det_full), std::abs(det_reduced), 1.0});
    if (std::abs(det_full - det_reduced) > 1e-10 * scale) {
        std::ostringstream os;
        os << "determinant reduction mismatch: full " << det_full
           << " vs reduced " << det_reduced;
        throw NumericError(os.str());
    }
    return det_reduced;
}

CorrelationMatrix shrink_to_pd(const SymMatrix& s, double m) {
    require(m > 0.0, "shrink_to_pd: m must be positive");
    const int n = s.size();
    for (int i = 0; i < n; ++i) {
        require(std::abs(s(i, i) - 1.0) <= 1e-12,
                "shrink_to_pd: input must have unit diagonal");
    }
    const double denom = 1.0 + 1.0 / m;
    SymMatrix r(n);
    for (int i = 0; i < n; ++i) {
        r.set(i, i, 1.0);
        for (int j = i + 1; j < n; ++j) r.set(i, j, s(i, j) / denom);
    }
    return CorrelationMatrix(r);
}

CorrelationMatrix correlation_of(const SymMatrix& cov) {
    const int n = cov.size();
    for (int i = 0; i < n; ++i) {
        require(cov(i, i) > 0.0,
                "correlation_of: covariance diagonal must be positive");
    }
    SymMatrix r(n);
    for (int i = 0; i < n; ++i) {
        r.set(i, i, 1.0);
        for (int j = i + 1; j < n; ++j) {
            r.set(i, j, cov(i, j) / std::sqrt(cov(i, i) * cov(j, j)));
        }
    }
    return CorrelationMatrix(r);
}

} // namespace gpi::linalg
