// delaunay.hpp - planar Delaunay triangulation of scattered sites.

#pragma once

#include <array>
#include <vector>

namespace mvmorph {

struct Triangulation {
    // Indices into the input site list, counter-clockwise.
    std::vector<std::array<int, 3>> triangles;
    // Input index kept for each site; coincident duplicates map to the first copy.
    std::vector<int> representative;
};

// Throws InvalidArgument for fewer than three distinct sites or collinear input.
Triangulation delaunay(const std::vector<std::array<double, 2>> &sites);

} // namespace mvmorph
