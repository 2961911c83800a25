#include "fraclod/coefficients.hpp"

#include "fraclod/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fraclod {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace

double cell_uniform(std::uint64_t seed, Index row, Index col, double lo, double hi) {
    const std::uint64_t key = seed ^ (static_cast<std::uint64_t>(row) * 0x9E3779B97F4A7C15ULL) ^
                              static_cast<std::uint64_t>(col);
    const double u = static_cast<double>(splitmix64(key) >> 11) * 0x1.0p-53;
    const double v = lo + (hi - lo) * u;
    return v < hi ? v : std::nextafter(hi, lo);
}

GridField::GridField(Index n, double lo, double hi, std::vector<double> values)
    : n_(n), lo_(lo), hi_(hi), values_(std::move(values)) {
    if (n < 1) throw InputError("grid field: n must be >= 1");
    if (values_.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n))
        throw InputError("grid field: expected n*n values");
}

GridField GridField::sample_uniform(Index n, double lo, double hi, std::uint64_t seed) {
    if (n < 1) throw InputError("sample_uniform: n must be >= 1");
    if (!(lo < hi)) throw InputError("sample_uniform: need lo < hi");
    std::vector<double> v(static_cast<std::size_t>(n) * n);
    for (Index r = 0; r < n; ++r)
        for (Index c = 0; c < n; ++c) v[static_cast<std::size_t>(r) * n + c] = cell_uniform(seed, r, c, lo, hi);
    return GridField(n, lo, hi, std::move(v));
}

GridField GridField::constant(double c, Index n) {
    return GridField(n, c, c, std::vector<double>(static_cast<std::size_t>(n) * n, c));
}

double GridField::eval(Point2 p) const {
    constexpr double tol = 1e-12;
    if (!(p.x >= -tol && p.x <= 1.0 + tol && p.y >= -tol && p.y <= 1.0 + tol))
        throw InputError("grid field: point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                         ") outside the unit square");
    const auto idx = [this](double s) {
        return std::clamp<Index>(static_cast<Index>(std::floor(s * n_)), 0, n_ - 1);
    };
    return cell(idx(p.y), idx(p.x));
}

GridField GridField::scaled(double c) const {
    std::vector<double> v(values_);
    for (auto& x : v) x *= c;
    return GridField(n_, std::min(c * lo_, c * hi_), std::max(c * lo_, c * hi_), std::move(v));
}

GridField layered_field(Index n, double lo, double hi, std::span<const std::uint64_t> seeds,
                        const std::function<Index(Point2)>& region_of) {
    if (n < 1) throw InputError("layered_field: n must be >= 1");
    if (!(lo < hi)) throw InputError("layered_field: need lo < hi");
    if (seeds.empty()) throw InputError("layered_field: no seeds");
    std::vector<double> v(static_cast<std::size_t>(n) * n);
    for (Index r = 0; r < n; ++r) {
        for (Index c = 0; c < n; ++c) {
            const Point2 center{(c + 0.5) / n, (r + 0.5) / n};
            const Index region = region_of(center);
            if (region < 0 || static_cast<std::size_t>(region) >= seeds.size())
                throw InputError("layered_field: no region for cell (" + std::to_string(r) + ", " +
                                 std::to_string(c) + ")");
            v[static_cast<std::size_t>(r) * n + c] = cell_uniform(seeds[region], r, c, lo, hi);
        }
    }
    return GridField(n, lo, hi, std::move(v));
}

ScalarField ScalarField::constant(double c) {
    ScalarField f;
    f.kind_ = Kind::constant;
    f.value_ = c;
    f.name_ = std::to_string(c);
    return f;
}

ScalarField ScalarField::box(Point2 lo, Point2 hi, double inside, double outside) {
    if (!(lo.x <= hi.x && lo.y <= hi.y)) throw InputError("box source: lower corner exceeds upper corner");
    ScalarField f;
    f.kind_ = Kind::box;
    f.lo_ = lo;
    f.hi_ = hi;
    f.value_ = inside;
    f.outside_ = outside;
    f.name_ = "box";
    return f;
}

const std::vector<std::string>& ScalarField::formula_names() {
    static const std::vector<std::string> names{"9+sin(x+y)", "9+cos(x+y)", "x", "y", "x+y",
                                                "sin(pi*x)*sin(pi*y)"};
    return names;
}

ScalarField ScalarField::formula(const std::string& name) {
    std::function<double(Point2)> fn;
    if (name == "9+sin(x+y)") fn = [](Point2 p) { return 9.0 + std::sin(p.x + p.y); };
    else if (name == "9+cos(x+y)") fn = [](Point2 p) { return 9.0 + std::cos(p.x + p.y); };
    else if (name == "x") fn = [](Point2 p) { return p.x; };
    else if (name == "y") fn = [](Point2 p) { return p.y; };
    else if (name == "x+y") fn = [](Point2 p) { return p.x + p.y; };
    else if (name == "sin(pi*x)*sin(pi*y)")
        fn = [](Point2 p) { return std::sin(std::numbers::pi * p.x) * std::sin(std::numbers::pi * p.y); };
    else throw InputError("unknown formula '" + name + "'");
    return custom(name, std::move(fn));
}

ScalarField ScalarField::custom(std::string name, std::function<double(Point2)> fn) {
    if (!fn) throw InputError("custom field without a function");
    ScalarField f;
    f.kind_ = Kind::formula;
    f.name_ = std::move(name);
    f.fn_ = std::move(fn);
    return f;
}

double ScalarField::operator()(Point2 p) const {
    switch (kind_) {
        case Kind::constant: return value_;
        case Kind::box:
            return (p.x >= lo_.x && p.x <= hi_.x && p.y >= lo_.y && p.y <= hi_.y) ? value_ : outside_;
        case Kind::formula: return fn_(p);
    }
    return 0.0;
}

ScalarField ScalarField::scaled(double c) const {
    ScalarField f = *this;
    f.value_ *= c;
    f.outside_ *= c;
    if (kind_ == Kind::formula) {
        auto inner = fn_;
        f.fn_ = [inner, c](Point2 p) { return c * inner(p); };
    }
    return f;
}

InterfaceData::InterfaceData(std::vector<InterfaceConstants> per_polyline) : data_(std::move(per_polyline)) {
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!(data_[i].a_gamma > 0.0))
            throw InputError("interface " + std::to_string(i) + ": A_Gamma must be positive");
        if (!(data_[i].b_gamma >= 0.0))
            throw InputError("interface " + std::to_string(i) + ": B_Gamma must be non-negative");
    }
}

InterfaceData InterfaceData::uniform(Index num_polylines, double a_gamma, double b_gamma, ScalarField f_gamma) {
    return InterfaceData(std::vector<InterfaceConstants>(static_cast<std::size_t>(num_polylines),
                                                         InterfaceConstants{a_gamma, b_gamma, f_gamma}));
}

const InterfaceConstants& InterfaceData::operator[](Index polyline) const {
    if (polyline < 0 || polyline >= size())
        throw InputError("no interface data for polyline " + std::to_string(polyline));
    return data_[polyline];
}

InterfaceData InterfaceData::scaled_sources(double c) const {
    InterfaceData out = *this;
    for (auto& d : out.data_) d.f_gamma = d.f_gamma.scaled(c);
    return out;
}

}  // namespace fraclod
