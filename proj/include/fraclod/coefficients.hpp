#pragma once

#include "fraclod/mesh.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace fraclod {

/// Uniform draw in [lo, hi) for cell (row, col): SplitMix64 applied to
/// seed ^ (row * 0x9E3779B97F4A7C15) ^ col, top 53 bits scaled to [0, 1).
double cell_uniform(std::uint64_t seed, Index row, Index col, double lo, double hi);

/// Piecewise constant field on an n x n Cartesian grid over the unit square.
/// Cell (row, col) covers [col/n, (col+1)/n) x [row/n, (row+1)/n).
class GridField {
public:
    GridField() = default;
    GridField(Index n, double lo, double hi, std::vector<double> values);

    static GridField sample_uniform(Index n, double lo, double hi, std::uint64_t seed);
    static GridField constant(double c, Index n = 1);

    Index n() const { return n_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    const std::vector<double>& values() const { return values_; }
    double cell(Index row, Index col) const { return values_[static_cast<std::size_t>(row) * n_ + col]; }

    /// Value of the cell containing p (floor of p * n, clamped to the last
    /// cell on the upper boundary). Throws InputError outside the unit square.
    double eval(Point2 p) const;
    GridField scaled(double c) const;

private:
    Index n_ = 1;
    double lo_ = 1.0;
    double hi_ = 1.0;
    std::vector<double> values_{1.0};
};

/// Cell values drawn with the seed of the region containing the cell
/// center. `region_of` returns an index into `seeds`.
GridField layered_field(Index n, double lo, double hi, std::span<const std::uint64_t> seeds,
                        const std::function<Index(Point2)>& region_of);

/// Scalar data on Ω or on Γ.
class ScalarField {
public:
    enum class Kind { constant, box, formula };

    ScalarField() = default;
    static ScalarField constant(double c);
    /// `inside` on [x0,x1] x [y0,y1], `outside` elsewhere. Integrals classify
    /// whole triangles (or trace pieces) by their centroid.
    static ScalarField box(Point2 lo, Point2 hi, double inside, double outside = 0.0);
    /// Named analytic formula, e.g. "9+sin(x+y)". See formula_names().
    static ScalarField formula(const std::string& name);
    static ScalarField custom(std::string name, std::function<double(Point2)> fn);
    static const std::vector<std::string>& formula_names();

    Kind kind() const { return kind_; }
    const std::string& name() const { return name_; }
    double operator()(Point2 p) const;
    bool is_zero() const { return kind_ == Kind::constant && value_ == 0.0; }
    ScalarField scaled(double c) const;

private:
    Kind kind_ = Kind::constant;
    double value_ = 0.0;
    Point2 lo_;
    Point2 hi_;
    double outside_ = 0.0;
    std::string name_ = "0";
    std::function<double(Point2)> fn_;
};

/// Per-polyline interface data.
struct InterfaceConstants {
    double a_gamma = 1.0;  // tangential permeability
    double b_gamma = 0.0;  // interface density (wave only)
    ScalarField f_gamma;
};

class InterfaceData {
public:
    InterfaceData() = default;
    explicit InterfaceData(std::vector<InterfaceConstants> per_polyline);
    static InterfaceData uniform(Index num_polylines, double a_gamma, double b_gamma, ScalarField f_gamma);

    Index size() const { return static_cast<Index>(data_.size()); }
    const InterfaceConstants& operator[](Index polyline) const;
    InterfaceData scaled_sources(double c) const;

private:
    std::vector<InterfaceConstants> data_;
};

struct SourceTerm {
    ScalarField f;
    double b = 1.0;  // bulk density (wave only)
};

}  // namespace fraclod
