#pragma once

#include "fraclod/fracture.hpp"
#include "fraclod/mesh.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fraclod {

/// Γ = {x = 0.5}.
FractureNetwork gamma_vertical_half();

/// Five rough interfaces, each a staircase of horizontal and vertical 1/64
/// grid edges: one crossing the domain from left to right, one ending on it
/// (triple junction), one crossing it from bottom to top, one crossing it
/// with both ends immersed, and one immersed piece. Every segment is an edge
/// of unit_square_structured(64) and of its refinements; inside a coarse
/// triangle the trace is bent, so the dual basis on Γ_T usually exists.
FractureNetwork five_interfaces_2e7();

/// Coarse unstructured mesh of the unit square (16 x 16 nodes, jittered,
/// random diagonals) together with two bottom-to-top interfaces made of its
/// edges.
struct LayeredMesh {
    TriMesh mesh;
    FractureNetwork network;
};
LayeredMesh two_layer_unstructured(std::uint64_t seed = 7);

/// Number of polylines of `network` lying to the left of p (horizontal ray
/// crossing parity per polyline). Used to tell the layers apart.
Index layer_of(const FractureNetwork& network, Point2 p);

/// Names accepted by builtin_network().
const std::vector<std::string>& builtin_geometry_names();
/// Network of a built-in geometry; for `two_layer_unstructured` the
/// matching mesh comes from two_layer_unstructured().
FractureNetwork builtin_network(const std::string& name);

}  // namespace fraclod
