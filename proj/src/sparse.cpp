#include "fraclod/sparse.hpp"

#include "fraclod/error.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fraclod {

namespace {

using EigenCsc = Eigen::SparseMatrix<double, Eigen::ColMajor, Index>;
using EigenCsr = Eigen::SparseMatrix<double, Eigen::RowMajor, Index>;

EigenCsc to_eigen(const SparseMatrix& a) {
    Eigen::Map<const EigenCsr> view(a.rows(), a.cols(), a.nnz(), a.row_offsets().data(),
                                    a.col_indices().data(), a.values().data());
    EigenCsc out = view;
    out.makeCompressed();
    return out;
}

}  // namespace

SparseMatrix::SparseMatrix(Index rows, Index cols, std::vector<Index> row_offsets,
                           std::vector<Index> col_indices, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
    if (rows_ < 0 || cols_ < 0) throw InputError("sparse matrix: negative dimension");
    if (row_offsets_.size() != static_cast<std::size_t>(rows_) + 1 || row_offsets_.front() != 0)
        throw InputError("sparse matrix: row_offsets must have rows+1 entries starting at 0");
    if (col_indices_.size() != values_.size() ||
        row_offsets_.back() != static_cast<Index>(values_.size()))
        throw InputError("sparse matrix: last row offset must equal the number of stored values");
    for (Index i = 0; i < rows_; ++i) {
        if (row_offsets_[i + 1] < row_offsets_[i])
            throw InputError("sparse matrix: row_offsets must be non-decreasing");
        for (Index p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) {
            if (col_indices_[p] < 0 || col_indices_[p] >= cols_)
                throw InputError("sparse matrix: column index out of range");
            if (p > row_offsets_[i] && col_indices_[p] <= col_indices_[p - 1])
                throw InputError("sparse matrix: column indices must be strictly increasing in a row");
        }
    }
}

SparseMatrix SparseMatrix::from_triplets(Index rows, Index cols, std::vector<Triplet> triplets) {
    for (const auto& t : triplets) {
        if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
            throw InputError("sparse matrix: triplet out of range");
    }
    std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    std::vector<Index> offsets(static_cast<std::size_t>(rows) + 1, 0);
    std::vector<Index> cols_out;
    std::vector<double> vals;
    cols_out.reserve(triplets.size());
    vals.reserve(triplets.size());
    std::size_t p = 0;
    for (Index i = 0; i < rows; ++i) {
        while (p < triplets.size() && triplets[p].row == i) {
            const Index c = triplets[p].col;
            double sum = 0.0;
            while (p < triplets.size() && triplets[p].row == i && triplets[p].col == c) {
                sum += triplets[p].value;
                ++p;
            }
            cols_out.push_back(c);
            vals.push_back(sum);
        }
        offsets[i + 1] = static_cast<Index>(vals.size());
    }
    return SparseMatrix(rows, cols, std::move(offsets), std::move(cols_out), std::move(vals));
}

SparseMatrix SparseMatrix::identity(Index n) {
    std::vector<Index> offsets(static_cast<std::size_t>(n) + 1);
    std::vector<Index> cols(static_cast<std::size_t>(n));
    std::iota(offsets.begin(), offsets.end(), 0);
    std::iota(cols.begin(), cols.end(), 0);
    return SparseMatrix(n, n, std::move(offsets), std::move(cols), std::vector<double>(n, 1.0));
}

SparseMatrix SparseMatrix::zero(Index rows, Index cols) {
    return SparseMatrix(rows, cols, std::vector<Index>(static_cast<std::size_t>(rows) + 1, 0), {}, {});
}

double SparseMatrix::coeff(Index i, Index j) const {
    const auto begin = col_indices_.begin() + row_offsets_[i];
    const auto end = col_indices_.begin() + row_offsets_[i + 1];
    const auto it = std::lower_bound(begin, end, j);
    if (it == end || *it != j) return 0.0;
    return values_[static_cast<std::size_t>(it - col_indices_.begin())];
}

double SparseMatrix::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

bool SparseMatrix::is_symmetric(double rel_tol) const {
    if (rows_ != cols_) return false;
    const double tol = rel_tol * max_abs();
    for (Index i = 0; i < rows_; ++i) {
        for (Index p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) {
            if (std::abs(values_[p] - coeff(col_indices_[p], i)) > tol) return false;
        }
    }
    return true;
}

SparseMatrix SparseMatrix::transpose() const {
    std::vector<Index> offsets(static_cast<std::size_t>(cols_) + 1, 0);
    for (Index c : col_indices_) ++offsets[c + 1];
    for (Index j = 0; j < cols_; ++j) offsets[j + 1] += offsets[j];
    std::vector<Index> next(offsets.begin(), offsets.end() - 1);
    std::vector<Index> cols(values_.size());
    std::vector<double> vals(values_.size());
    for (Index i = 0; i < rows_; ++i) {
        for (Index p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) {
            const Index q = next[col_indices_[p]]++;
            cols[q] = i;
            vals[q] = values_[p];
        }
    }
    return SparseMatrix(cols_, rows_, std::move(offsets), std::move(cols), std::move(vals));
}

SparseMatrix SparseMatrix::scaled(double factor) const {
    SparseMatrix out = *this;
    for (double& v : out.values_) v *= factor;
    return out;
}

SparseMatrix SparseMatrix::submatrix(std::span<const Index> row_ids, std::span<const Index> col_ids) const {
    // Small sorted column sets are looked up by binary search instead of a
    // dense map, which would cost O(cols) per call.
    const bool sparse_lookup =
        col_ids.size() * 16 < static_cast<std::size_t>(cols_) && std::is_sorted(col_ids.begin(), col_ids.end());
    std::vector<Index> col_map;
    if (!sparse_lookup) {
        col_map.assign(static_cast<std::size_t>(cols_), -1);
        for (std::size_t j = 0; j < col_ids.size(); ++j) col_map[col_ids[j]] = static_cast<Index>(j);
    }
    const auto lookup = [&](Index c) -> Index {
        if (!sparse_lookup) return col_map[c];
        const auto it = std::lower_bound(col_ids.begin(), col_ids.end(), c);
        return (it != col_ids.end() && *it == c) ? static_cast<Index>(it - col_ids.begin()) : -1;
    };
    std::vector<Index> offsets(row_ids.size() + 1, 0);
    std::vector<Index> cols;
    std::vector<double> vals;
    std::vector<std::pair<Index, double>> row;
    for (std::size_t r = 0; r < row_ids.size(); ++r) {
        const Index i = row_ids[r];
        row.clear();
        for (Index p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) {
            const Index c = lookup(col_indices_[p]);
            if (c >= 0) row.emplace_back(c, values_[p]);
        }
        std::sort(row.begin(), row.end());
        for (const auto& [c, v] : row) {
            cols.push_back(c);
            vals.push_back(v);
        }
        offsets[r + 1] = static_cast<Index>(vals.size());
    }
    return SparseMatrix(static_cast<Index>(row_ids.size()), static_cast<Index>(col_ids.size()),
                        std::move(offsets), std::move(cols), std::move(vals));
}

SparseMatrix SparseMatrix::pruned(double tol) const {
    std::vector<Index> offsets(static_cast<std::size_t>(rows_) + 1, 0);
    std::vector<Index> cols;
    std::vector<double> vals;
    for (Index i = 0; i < rows_; ++i) {
        for (Index p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) {
            if (std::abs(values_[p]) > tol) {
                cols.push_back(col_indices_[p]);
                vals.push_back(values_[p]);
            }
        }
        offsets[i + 1] = static_cast<Index>(vals.size());
    }
    return SparseMatrix(rows_, cols_, std::move(offsets), std::move(cols), std::move(vals));
}

SparseMatrix operator+(const SparseMatrix& a, const SparseMatrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw InputError("sparse add: dimension mismatch");
    std::vector<Index> offsets(static_cast<std::size_t>(a.rows_) + 1, 0);
    std::vector<Index> cols;
    std::vector<double> vals;
    cols.reserve(a.values_.size() + b.values_.size());
    vals.reserve(a.values_.size() + b.values_.size());
    for (Index i = 0; i < a.rows_; ++i) {
        Index p = a.row_offsets_[i];
        Index q = b.row_offsets_[i];
        const Index pe = a.row_offsets_[i + 1];
        const Index qe = b.row_offsets_[i + 1];
        while (p < pe || q < qe) {
            const Index ca = p < pe ? a.col_indices_[p] : a.cols_;
            const Index cb = q < qe ? b.col_indices_[q] : b.cols_;
            if (ca == cb) {
                cols.push_back(ca);
                vals.push_back(a.values_[p++] + b.values_[q++]);
            } else if (ca < cb) {
                cols.push_back(ca);
                vals.push_back(a.values_[p++]);
            } else {
                cols.push_back(cb);
                vals.push_back(b.values_[q++]);
            }
        }
        offsets[i + 1] = static_cast<Index>(vals.size());
    }
    return SparseMatrix(a.rows_, a.cols_, std::move(offsets), std::move(cols), std::move(vals));
}

SparseMatrix operator*(const SparseMatrix& a, const SparseMatrix& b) {
    if (a.cols_ != b.rows_) throw InputError("sparse product: dimension mismatch");
    // Gustavson row-by-row product with a dense accumulator.
    std::vector<double> acc(static_cast<std::size_t>(b.cols_), 0.0);
    std::vector<Index> marker(static_cast<std::size_t>(b.cols_), -1);
    std::vector<Index> pattern;
    std::vector<Index> offsets(static_cast<std::size_t>(a.rows_) + 1, 0);
    std::vector<Index> cols;
    std::vector<double> vals;
    for (Index i = 0; i < a.rows_; ++i) {
        pattern.clear();
        for (Index p = a.row_offsets_[i]; p < a.row_offsets_[i + 1]; ++p) {
            const Index k = a.col_indices_[p];
            const double av = a.values_[p];
            for (Index q = b.row_offsets_[k]; q < b.row_offsets_[k + 1]; ++q) {
                const Index j = b.col_indices_[q];
                if (marker[j] != i) {
                    marker[j] = i;
                    acc[j] = 0.0;
                    pattern.push_back(j);
                }
                acc[j] += av * b.values_[q];
            }
        }
        std::sort(pattern.begin(), pattern.end());
        for (Index j : pattern) {
            cols.push_back(j);
            vals.push_back(acc[j]);
        }
        offsets[i + 1] = static_cast<Index>(vals.size());
    }
    return SparseMatrix(a.rows_, b.cols_, std::move(offsets), std::move(cols), std::move(vals));
}

Vector spmv(const SparseMatrix& a, std::span<const double> x) {
    if (static_cast<Index>(x.size()) != a.cols())
        throw InputError("spmv: dimension mismatch (" + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " times " + std::to_string(x.size()) + ")");
    Vector y(static_cast<std::size_t>(a.rows()), 0.0);
    const auto off = a.row_offsets();
    const auto col = a.col_indices();
    const auto val = a.values();
    for (Index i = 0; i < a.rows(); ++i) {
        double sum = 0.0;
        for (Index p = off[i]; p < off[i + 1]; ++p) sum += val[p] * x[col[p]];
        y[i] = sum;
    }
    return y;
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InputError("dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// ---------------------------------------------------------------------------

struct SpdFactorization::Impl {
    SparseMatrix a;
    Eigen::SimplicialLDLT<EigenCsc, Eigen::Lower, Eigen::AMDOrdering<Index>> ldlt;

    Vector raw_solve(std::span<const double> b) const {
        Eigen::Map<const Eigen::VectorXd> rhs(b.data(), static_cast<Eigen::Index>(b.size()));
        Eigen::VectorXd x = ldlt.solve(rhs);
        return Vector(x.data(), x.data() + x.size());
    }
};

SpdFactorization::SpdFactorization(const SparseMatrix& a) : impl_(std::make_unique<Impl>()) {
    if (a.rows() != a.cols()) throw InputError("solve_spd: matrix must be square");
    impl_->a = a;
    if (a.rows() == 0) return;
    impl_->ldlt.compute(to_eigen(a));
    if (impl_->ldlt.info() != Eigen::Success) throw NumericalError("matrix not SPD (factorization failed)");
    const Eigen::VectorXd d = impl_->ldlt.vectorD();
    const double dmax = d.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        if (!(d[i] > 1e-14 * dmax)) throw NumericalError("matrix not SPD (non-positive pivot)");
    }
}

SpdFactorization::~SpdFactorization() = default;
SpdFactorization::SpdFactorization(SpdFactorization&&) noexcept = default;
SpdFactorization& SpdFactorization::operator=(SpdFactorization&&) noexcept = default;

Index SpdFactorization::size() const { return impl_->a.rows(); }

Vector SpdFactorization::solve(std::span<const double> b) const {
    if (static_cast<Index>(b.size()) != size()) throw InputError("solve_spd: dimension mismatch");
    const double bnorm = norm2(b);
    if (bnorm == 0.0) return Vector(b.size(), 0.0);
    Vector x = impl_->raw_solve(b);
    for (int iter = 0; iter < 2; ++iter) {
        Vector r = spmv(impl_->a, x);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
        if (norm2(r) <= 1e-12 * bnorm) break;
        const Vector dx = impl_->raw_solve(r);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += dx[i];
    }
    return x;
}

Vector solve_spd(const SparseMatrix& a, std::span<const double> b) {
    if (static_cast<Index>(b.size()) != a.rows()) throw InputError("solve_spd: dimension mismatch");
    if (norm2(b) == 0.0) {
        // Still validate definiteness so a bad matrix never passes silently.
        SpdFactorization check(a);
        return Vector(b.size(), 0.0);
    }
    return SpdFactorization(a).solve(b);
}

// ---------------------------------------------------------------------------

struct SaddleFactorization::Impl {
    std::string label;
    SparseMatrix c;
    std::unique_ptr<SpdFactorization> k;
    std::vector<Index> active;
    Eigen::MatrixXd y;  // K^-1 C_active^T
    Eigen::LLT<Eigen::MatrixXd> schur;
};

SaddleFactorization::SaddleFactorization(const SparseMatrix& k, const SparseMatrix& c, std::string label)
    : impl_(std::make_unique<Impl>()) {
    impl_->label = std::move(label);
    if (k.rows() != k.cols() || c.cols() != k.rows())
        throw InputError("solve_saddle: dimension mismatch");
    impl_->c = c;
    try {
        impl_->k = std::make_unique<SpdFactorization>(k);
    } catch (const NumericalError& e) {
        throw NumericalError("singular patch problem" +
                             (impl_->label.empty() ? std::string() : " [" + impl_->label + "]") + ": " +
                             e.what());
    }
    const Index n = k.rows();

    std::vector<Index> nonzero_rows;
    const auto off = c.row_offsets();
    const auto val = c.values();
    for (Index i = 0; i < c.rows(); ++i) {
        double s = 0.0;
        for (Index p = off[i]; p < off[i + 1]; ++p) s += val[p] * val[p];
        if (std::sqrt(s) >= 1e-14) nonzero_rows.push_back(i);
    }
    const auto m = static_cast<Eigen::Index>(nonzero_rows.size());
    if (m == 0) return;

    Eigen::MatrixXd y(n, m);
    Vector col(static_cast<std::size_t>(n));
    const auto ci = c.col_indices();
    for (Eigen::Index r = 0; r < m; ++r) {
        std::fill(col.begin(), col.end(), 0.0);
        const Index i = nonzero_rows[r];
        for (Index p = off[i]; p < off[i + 1]; ++p) col[ci[p]] = val[p];
        const Vector sol = impl_->k->solve(col);
        for (Index j = 0; j < n; ++j) y(j, r) = sol[j];
    }
    Eigen::MatrixXd s(m, m);
    for (Eigen::Index r = 0; r < m; ++r) {
        const Index i = nonzero_rows[r];
        for (Eigen::Index q = 0; q < m; ++q) {
            double sum = 0.0;
            for (Index p = off[i]; p < off[i + 1]; ++p) sum += val[p] * y(ci[p], q);
            s(r, q) = sum;
        }
    }
    s = 0.5 * (s + s.transpose()).eval();

    // Greedy diagonally pivoted Cholesky to find a maximal well-conditioned
    // subset of constraint rows.
    Eigen::MatrixXd work = s;
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), 0);
    const double dmax = s.diagonal().maxCoeff();
    const double tol = 1e-10 * dmax;
    Eigen::Index rank = 0;
    for (Eigen::Index j = 0; j < m; ++j) {
        Eigen::Index p = j;
        for (Eigen::Index i = j + 1; i < m; ++i) {
            if (work(i, i) > work(p, p)) p = i;
        }
        if (!(work(p, p) > tol)) break;
        if (p != j) {
            work.row(j).swap(work.row(p));
            work.col(j).swap(work.col(p));
            std::swap(perm[j], perm[p]);
        }
        const double piv = std::sqrt(work(j, j));
        work(j, j) = piv;
        for (Eigen::Index i = j + 1; i < m; ++i) work(i, j) /= piv;
        for (Eigen::Index q = j + 1; q < m; ++q) {
            for (Eigen::Index i = q; i < m; ++i) {
                work(i, q) -= work(i, j) * work(q, j);
                work(q, i) = work(i, q);
            }
        }
        rank = j + 1;
    }
    std::vector<Eigen::Index> kept(perm.begin(), perm.begin() + rank);
    std::sort(kept.begin(), kept.end());

    const auto ma = static_cast<Eigen::Index>(kept.size());
    impl_->y.resize(n, ma);
    Eigen::MatrixXd sk(ma, ma);
    for (Eigen::Index a = 0; a < ma; ++a) {
        impl_->y.col(a) = y.col(kept[a]);
        impl_->active.push_back(nonzero_rows[kept[a]]);
        for (Eigen::Index b = 0; b < ma; ++b) sk(a, b) = s(kept[a], kept[b]);
    }
    impl_->schur.compute(sk);
    if (impl_->schur.info() != Eigen::Success)
        throw NumericalError("singular patch problem" +
                             (impl_->label.empty() ? std::string() : " [" + impl_->label + "]"));
}

SaddleFactorization::~SaddleFactorization() = default;
SaddleFactorization::SaddleFactorization(SaddleFactorization&&) noexcept = default;
SaddleFactorization& SaddleFactorization::operator=(SaddleFactorization&&) noexcept = default;

const std::vector<Index>& SaddleFactorization::active_rows() const { return impl_->active; }

SaddleSolution SaddleFactorization::solve(std::span<const double> rhs_primal,
                                          std::span<const double> rhs_dual) const {
    const Impl& im = *impl_;
    if (static_cast<Index>(rhs_primal.size()) != im.k->size() ||
        static_cast<Index>(rhs_dual.size()) != im.c.rows())
        throw InputError("solve_saddle: right-hand side dimension mismatch");
    SaddleSolution out;
    out.primal = im.k->solve(rhs_primal);
    out.dual.assign(rhs_dual.size(), 0.0);
    if (!im.active.empty()) {
        const Vector cw = spmv(im.c, out.primal);
        const auto ma = static_cast<Eigen::Index>(im.active.size());
        Eigen::VectorXd g(ma);
        for (Eigen::Index a = 0; a < ma; ++a) g[a] = cw[im.active[a]] - rhs_dual[im.active[a]];
        const Eigen::VectorXd mu = im.schur.solve(g);
        const Eigen::VectorXd corr = im.y * mu;
        for (std::size_t j = 0; j < out.primal.size(); ++j) out.primal[j] -= corr[static_cast<Eigen::Index>(j)];
        for (Eigen::Index a = 0; a < ma; ++a) out.dual[im.active[a]] = mu[a];
    }
    if (im.c.rows() > 0) {
        const Vector cw = spmv(im.c, out.primal);
        double dscale = 1.0;
        for (double d : rhs_dual) dscale = std::max(dscale, std::abs(d));
        for (std::size_t i = 0; i < cw.size(); ++i) {
            if (std::abs(cw[i] - rhs_dual[i]) > 1e-9 * dscale)
                throw NumericalError("singular patch problem" +
                                     (im.label.empty() ? std::string() : " [" + im.label + "]") +
                                     ": constraint " + std::to_string(i) + " cannot be satisfied");
        }
    }
    return out;
}

SaddleSolution solve_saddle(const SaddleSystem& system, const std::string& label) {
    return SaddleFactorization(system.K, system.C, label).solve(system.rhs_primal, system.rhs_dual);
}

// ---------------------------------------------------------------------------

double energy_norm(const SparseMatrix& a, std::span<const double> v) {
    const Vector av = spmv(a, v);
    const double e = dot(v, av);
    const double vv = dot(v, v);
    if (e < -1e-12 * vv) throw NumericalError("matrix not PSD (v^T A v = " + std::to_string(e) + ")");
    return e > 0.0 ? std::sqrt(e) : 0.0;
}

std::vector<double> estimate_eoc(std::span<const double> errors, std::span<const double> mesh_sizes) {
    if (errors.size() != mesh_sizes.size() || errors.size() < 2)
        throw InputError("estimate_eoc: need two or more (error, mesh size) pairs of equal length");
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!(errors[i] > 0.0)) throw InputError("estimate_eoc: errors must be strictly positive");
        if (!(mesh_sizes[i] > 0.0)) throw InputError("estimate_eoc: mesh sizes must be strictly positive");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
        const double dh = std::log(mesh_sizes[i] / mesh_sizes[i + 1]);
        if (dh == 0.0) throw InputError("estimate_eoc: consecutive mesh sizes must differ");
        out.push_back(std::log(errors[i] / errors[i + 1]) / dh);
    }
    return out;
}

}  // namespace fraclod
