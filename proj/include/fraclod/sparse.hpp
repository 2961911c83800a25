#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace fraclod {

using Index = std::int32_t;

/// Coefficient vector over a dof set.
using Vector = std::vector<double>;

struct Triplet {
    Index row;
    Index col;
    double value;
};

/// Compressed sparse row matrix.
///
/// Column indices are strictly increasing inside each row. The matrix is a
/// value type; all operations that produce a new matrix return by value.
class SparseMatrix {
public:
    SparseMatrix() = default;

    /// Builds from raw CSR arrays; throws InputError when the invariants
    /// (monotone offsets, sorted unique columns, bounds) are violated.
    SparseMatrix(Index rows, Index cols, std::vector<Index> row_offsets,
                 std::vector<Index> col_indices, std::vector<double> values);

    /// Duplicate entries are summed in input order, so the result depends
    /// only on the triplet sequence.
    static SparseMatrix from_triplets(Index rows, Index cols, std::vector<Triplet> triplets);
    static SparseMatrix identity(Index n);
    static SparseMatrix zero(Index rows, Index cols);

    Index rows() const { return rows_; }
    Index cols() const { return cols_; }
    Index nnz() const { return static_cast<Index>(values_.size()); }

    std::span<const Index> row_offsets() const { return row_offsets_; }
    std::span<const Index> col_indices() const { return col_indices_; }
    std::span<const double> values() const { return values_; }

    /// Stored value at (i, j), or 0.
    double coeff(Index i, Index j) const;

    /// |a_ij - a_ji| <= rel_tol * max|a| over all stored pairs.
    bool is_symmetric(double rel_tol = 1e-14) const;
    double max_abs() const;

    SparseMatrix transpose() const;
    SparseMatrix scaled(double factor) const;

    /// Rows/columns picked by index lists (entries outside are dropped).
    SparseMatrix submatrix(std::span<const Index> row_ids, std::span<const Index> col_ids) const;

    /// Drops entries with |a_ij| <= tol.
    SparseMatrix pruned(double tol) const;

    friend SparseMatrix operator+(const SparseMatrix& a, const SparseMatrix& b);
    friend SparseMatrix operator*(const SparseMatrix& a, const SparseMatrix& b);

private:
    Index rows_ = 0;
    Index cols_ = 0;
    std::vector<Index> row_offsets_{0};
    std::vector<Index> col_indices_;
    std::vector<double> values_;
};

/// y = A x with a fixed left-to-right accumulation order per row.
Vector spmv(const SparseMatrix& a, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

/// Sparse LDL^T factorization of a symmetric positive definite matrix
/// (fill-reducing AMD ordering). Throws NumericalError("matrix not SPD")
/// on a non-positive pivot.
class SpdFactorization {
public:
    explicit SpdFactorization(const SparseMatrix& a);
    ~SpdFactorization();
    SpdFactorization(SpdFactorization&&) noexcept;
    SpdFactorization& operator=(SpdFactorization&&) noexcept;

    Index size() const;

    /// One step of iterative refinement is applied when the first solve
    /// misses the 1e-10 relative residual target.
    Vector solve(std::span<const double> b) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Solves A x = b for symmetric positive definite A.
Vector solve_spd(const SparseMatrix& a, std::span<const double> b);

/// K w + C^T mu = rhs_primal, C w = rhs_dual.
struct SaddleSystem {
    SparseMatrix K;
    SparseMatrix C;
    Vector rhs_primal;
    Vector rhs_dual;
};

struct SaddleSolution {
    Vector primal;
    Vector dual;
};

/// Factor-once, solve-many constrained solver.
///
/// K must be positive definite. The constraint block is reduced to a
/// full-rank set first: rows with norm < 1e-14 are dropped, then a pivoted
/// Cholesky factorization of the Schur complement C K^-1 C^T discards rows
/// that are numerically dependent on the ones already kept. Dropped rows get
/// a zero multiplier. Each solve checks that every constraint (dropped ones
/// included) holds to 1e-9; a violation means the reduced system was
/// inconsistent and raises NumericalError mentioning `label`.
class SaddleFactorization {
public:
    SaddleFactorization(const SparseMatrix& k, const SparseMatrix& c, std::string label = {});
    ~SaddleFactorization();
    SaddleFactorization(SaddleFactorization&&) noexcept;
    SaddleFactorization& operator=(SaddleFactorization&&) noexcept;

    SaddleSolution solve(std::span<const double> rhs_primal, std::span<const double> rhs_dual) const;

    /// Constraint rows kept after the redundancy elimination.
    const std::vector<Index>& active_rows() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

SaddleSolution solve_saddle(const SaddleSystem& system, const std::string& label = {});

/// sqrt(v^T A v). Round-off negatives down to -1e-12 |v|^2 are clamped to 0;
/// anything below throws NumericalError("matrix not PSD").
double energy_norm(const SparseMatrix& a, std::span<const double> v);

/// eoc_i = log(e_i / e_{i+1}) / log(h_i / h_{i+1}).
std::vector<double> estimate_eoc(std::span<const double> errors, std::span<const double> mesh_sizes);

}  // namespace fraclod
