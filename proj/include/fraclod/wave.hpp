#pragma once

#include "fraclod/fem.hpp"
#include "fraclod/lod.hpp"
#include "fraclod/sparse.hpp"

#include <limits>
#include <span>
#include <vector>

namespace fraclod {

struct WaveState {
    Vector u;
    Vector v;
    double t = 0.0;
};

struct TimeGrid {
    double tau = 1e-2;
    double t_end = 1.0;

    /// Throws InputError unless tau > 0 and t_end is a multiple of tau.
    void validate() const;
    Index steps() const;
    /// Step index of time t, which must lie on the grid.
    Index step_of(double t) const;
};

/// ½ vᵀMv + ½ uᵀKu
double wave_energy(const SparseMatrix& m, const SparseMatrix& k, const WaveState& s);

/// Trapezoidal rule for M v' = -K u + F, u' = v. `f0`, `f1` are the loads
/// at the beginning and end of the step.
class CrankNicolson {
public:
    CrankNicolson(SparseMatrix m, SparseMatrix k, double tau);

    WaveState step(const WaveState& s, std::span<const double> f0, std::span<const double> f1) const;
    double tau() const { return tau_; }
    const SparseMatrix& mass() const { return m_; }
    const SparseMatrix& stiffness() const { return k_; }

private:
    SparseMatrix m_;
    SparseMatrix k_;
    double tau_;
    SpdFactorization lhs_;
};

/// One step without a reusable factorization.
WaveState cn_step(const SparseMatrix& m, const SparseMatrix& k, std::span<const double> f0, std::span<const double> f1,
                  const WaveState& s, double tau);

struct WaveOptions {
    /// The constant load is applied for t <= forcing_cutoff and 0 afterwards.
    double forcing_cutoff = std::numeric_limits<double>::infinity();
    std::vector<double> sample_times;
    bool record_energy = false;
};

struct WaveTrajectory {
    std::vector<double> times;
    std::vector<Vector> u;        // displacement at each sample time (fine dofs)
    std::vector<double> energy;   // per step, including t = 0, when recorded
};

/// Zero initial data. Samples are mapped through `to_fine` when given.
WaveTrajectory wave_solve(const SparseMatrix& m, const SparseMatrix& k, std::span<const double> load,
                          const TimeGrid& grid, const WaveOptions& options,
                          const SparseMatrix* to_fine = nullptr);

/// Fine SFEM space: M = M_bulk + M_iface, K = K_bulk + K_iface.
WaveTrajectory wave_solve_fine(const AssembledForms& forms, const TimeGrid& grid, const WaveOptions& options);
/// Multiscale space spanned by the columns of `basis`.
WaveTrajectory wave_solve_lod(const AssembledForms& forms, const SparseMatrix& basis, const TimeGrid& grid,
                              const WaveOptions& options);

/// Relative energy error of the displacement at sample time t.
double wave_error_at(double t, const WaveTrajectory& reference, const WaveTrajectory& other, const SparseMatrix& k);

}  // namespace fraclod
