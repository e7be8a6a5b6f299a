// delaunay.cpp - Delaunay triangles read off Boost.Polygon's Voronoi diagram.
//
// Sites are snapped to an integer lattice so the Voronoi construction is exact;
// every Voronoi vertex is the circumcentre of one Delaunay face. Faces with
// more than three cocircular sites are fanned from their lexicographically
// smallest site.

#include "mvmorph/delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include <boost/polygon/voronoi.hpp>

#include "mvmorph/errors.hpp"

namespace mvmorph {

namespace {

double orient(const std::array<double, 2> &a, const std::array<double, 2> &b, const std::array<double, 2> &c) {
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
}

} // namespace

Triangulation delaunay(const std::vector<std::array<double, 2>> &sites) {
    namespace bp = boost::polygon;
    if (sites.size() < 3) throw InvalidArgument("delaunay: need at least three sites");

    double lo0 = sites[0][0], hi0 = lo0, lo1 = sites[0][1], hi1 = lo1;
    for (const auto &s : sites) {
        if (!std::isfinite(s[0]) || !std::isfinite(s[1])) throw InvalidArgument("delaunay: non-finite site");
        lo0 = std::min(lo0, s[0]);
        hi0 = std::max(hi0, s[0]);
        lo1 = std::min(lo1, s[1]);
        hi1 = std::max(hi1, s[1]);
    }
    const double range = std::max({hi0 - lo0, hi1 - lo1, 1e-300});
    const double scale = static_cast<double>(1 << 26) / range;

    Triangulation out;
    out.representative.resize(sites.size());
    std::map<std::pair<int, int>, int> seen;
    std::vector<bp::point_data<int>> points;
    std::vector<int> input_index;
    for (std::size_t i = 0; i < sites.size(); ++i) {
        const int x = static_cast<int>(std::lround((sites[i][0] - lo0) * scale));
        const int y = static_cast<int>(std::lround((sites[i][1] - lo1) * scale));
        auto [it, inserted] = seen.emplace(std::make_pair(x, y), static_cast<int>(i));
        out.representative[i] = it->second;
        if (inserted) {
            points.emplace_back(x, y);
            input_index.push_back(static_cast<int>(i));
        }
    }
    if (points.size() < 3) throw InvalidArgument("delaunay: need at least three distinct sites");

    bp::voronoi_diagram<double> vd;
    bp::construct_voronoi(points.begin(), points.end(), &vd);

    auto less_lex = [&](int a, int b) { return sites[a] < sites[b]; };
    std::vector<int> ring;
    for (const auto &vertex : vd.vertices()) {
        ring.clear();
        const auto *edge = vertex.incident_edge();
        do {
            ring.push_back(input_index[edge->cell()->source_index()]);
            edge = edge->rot_next();
        } while (edge != vertex.incident_edge());
        if (ring.size() < 3) continue;
        const auto first = std::min_element(ring.begin(), ring.end(), less_lex);
        std::rotate(ring.begin(), first, ring.end());
        for (std::size_t k = 1; k + 1 < ring.size(); ++k) {
            std::array<int, 3> tri{ring[0], ring[k], ring[k + 1]};
            const double o = orient(sites[tri[0]], sites[tri[1]], sites[tri[2]]);
            if (o == 0.0) continue;
            if (o < 0.0) std::swap(tri[1], tri[2]);
            out.triangles.push_back(tri);
        }
    }
    if (out.triangles.empty()) throw InvalidArgument("delaunay: sites are collinear");
    return out;
}

} // namespace mvmorph
