#include "fraclod/wave.hpp"

#include "fraclod/error.hpp"

#include <cmath>

namespace fraclod {

void TimeGrid::validate() const {
    if (!(tau > 0.0)) throw InputError("time grid: tau must be positive");
    if (!(t_end >= 0.0)) throw InputError("time grid: t_end must be non-negative");
    const double n = t_end / tau;
    if (std::abs(n - std::round(n)) > 1e-9 * std::max(1.0, n))
        throw InputError("time grid: t_end must be an integer multiple of tau");
}

Index TimeGrid::steps() const {
    validate();
    return static_cast<Index>(std::llround(t_end / tau));
}

Index TimeGrid::step_of(double t) const {
    const double n = t / tau;
    if (!(t >= 0.0) || std::abs(n - std::round(n)) > 1e-9 * std::max(1.0, n) || std::round(n) > steps())
        throw InputError("time grid: sample time " + std::to_string(t) + " is not a grid point");
    return static_cast<Index>(std::llround(n));
}

double wave_energy(const SparseMatrix& m, const SparseMatrix& k, const WaveState& s) {
    return 0.5 * dot(s.v, spmv(m, s.v)) + 0.5 * dot(s.u, spmv(k, s.u));
}

namespace {

SparseMatrix cn_matrix(const SparseMatrix& m, const SparseMatrix& k, double tau) {
    return m + k.scaled(0.25 * tau * tau);
}

WaveState advance(const SparseMatrix& m, const SparseMatrix& k, const SpdFactorization& lhs, double tau,
                  const WaveState& s, std::span<const double> f0, std::span<const double> f1) {
    const std::size_t n = s.u.size();
    if (s.v.size() != n || f0.size() != n || f1.size() != n) throw InputError("cn_step: vector length mismatch");
    Vector w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = s.u[i] + 0.25 * tau * s.v[i];
    const Vector kw = spmv(k, w);
    const Vector mv = spmv(m, s.v);
    Vector rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = mv[i] - tau * kw[i] + 0.5 * tau * (f0[i] + f1[i]);
    WaveState next;
    next.v = lhs.solve(rhs);
    next.u.resize(n);
    for (std::size_t i = 0; i < n; ++i) next.u[i] = s.u[i] + 0.5 * tau * (s.v[i] + next.v[i]);
    next.t = s.t + tau;
    return next;
}

}  // namespace

CrankNicolson::CrankNicolson(SparseMatrix m, SparseMatrix k, double tau)
    : m_(std::move(m)), k_(std::move(k)), tau_(tau), lhs_(cn_matrix(m_, k_, tau)) {
    if (!(tau > 0.0)) throw InputError("Crank-Nicolson: tau must be positive");
}

WaveState CrankNicolson::step(const WaveState& s, std::span<const double> f0, std::span<const double> f1) const {
    return advance(m_, k_, lhs_, tau_, s, f0, f1);
}

WaveState cn_step(const SparseMatrix& m, const SparseMatrix& k, std::span<const double> f0, std::span<const double> f1,
                  const WaveState& s, double tau) {
    if (!(tau > 0.0)) throw InputError("cn_step: tau must be positive");
    const SpdFactorization lhs(cn_matrix(m, k, tau));
    return advance(m, k, lhs, tau, s, f0, f1);
}

WaveTrajectory wave_solve(const SparseMatrix& m, const SparseMatrix& k, std::span<const double> load,
                          const TimeGrid& grid, const WaveOptions& options, const SparseMatrix* to_fine) {
    const Index steps = grid.steps();
    std::vector<Index> sample_steps;
    for (double t : options.sample_times) sample_steps.push_back(grid.step_of(t));

    const std::size_t n = load.size();
    const CrankNicolson cn(m, k, grid.tau);
    const Vector zero(n, 0.0);
    const Vector f(load.begin(), load.end());
    const auto force = [&](Index step) -> const Vector& {
        return step * grid.tau <= options.forcing_cutoff + 1e-12 * grid.tau ? f : zero;
    };

    WaveTrajectory traj;
    traj.times.resize(sample_steps.size());
    traj.u.resize(sample_steps.size());
    WaveState s{Vector(n, 0.0), Vector(n, 0.0), 0.0};
    const auto record = [&](Index step) {
        for (std::size_t i = 0; i < sample_steps.size(); ++i) {
            if (sample_steps[i] != step) continue;
            traj.times[i] = step * grid.tau;
            traj.u[i] = to_fine ? spmv(*to_fine, s.u) : s.u;
        }
        if (options.record_energy) traj.energy.push_back(wave_energy(m, k, s));
    };
    record(0);
    for (Index step = 0; step < steps; ++step) {
        s = cn.step(s, force(step), force(step + 1));
        s.t = (step + 1) * grid.tau;
        record(step + 1);
    }
    return traj;
}

WaveTrajectory wave_solve_fine(const AssembledForms& forms, const TimeGrid& grid, const WaveOptions& options) {
    return wave_solve(forms.M(), forms.K(), forms.f, grid, options);
}

WaveTrajectory wave_solve_lod(const AssembledForms& forms, const SparseMatrix& basis, const TimeGrid& grid,
                              const WaveOptions& options) {
    const CoarseSystem sys = assemble_coarse_system(forms, basis, true);
    return wave_solve(sys.mass, sys.stiffness, sys.load, grid, options, &basis);
}

double wave_error_at(double t, const WaveTrajectory& reference, const WaveTrajectory& other, const SparseMatrix& k) {
    const auto find = [t](const WaveTrajectory& tr) -> const Vector& {
        for (std::size_t i = 0; i < tr.times.size(); ++i)
            if (std::abs(tr.times[i] - t) <= 1e-12 * std::max(1.0, std::abs(t))) return tr.u[i];
        throw InputError("wave_error_at: no sample at t = " + std::to_string(t));
    };
    return relative_energy_error(find(reference), find(other), k);
}

}  // namespace fraclod
