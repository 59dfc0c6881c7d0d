#pragma once

#include <utility>
#include <vector>

namespace congestnet {

// Vertex indices into the input point list, counter-clockwise.
struct Triangle {
    int a = 0, b = 0, c = 0;

    bool operator==(const Triangle&) const = default;
};

// > 0 when (a,b,c) turn counter-clockwise, < 0 clockwise, 0 collinear.
double orient2d(std::pair<double, double> a, std::pair<double, double> b,
                std::pair<double, double> c);

// In-circle determinant: > 0 when d lies strictly inside the circumcircle of
// the counter-clockwise triangle (a,b,c).
double incircle_det(std::pair<double, double> a, std::pair<double, double> b,
                    std::pair<double, double> c, std::pair<double, double> d);

// Bowyer-Watson incremental Delaunay triangulation in double precision.
// Exactly coincident points are removed first (triangles reference the first
// occurrence); needs >= 3 distinct points, throws "degenerate point set" when
// all of them are collinear. The in-circle test treats |det| <= 1e-9 * span^2
// as on-circle; exactly cocircular quads are then flipped so the kept diagonal
// is the lexicographically smallest (min,max) index pair, which makes the
// result independent of insertion order for such ties. Triangles come back
// CCW, each rotated to start at its smallest vertex, sorted.
std::vector<Triangle> delaunay_triangulate(const std::vector<std::pair<double, double>>& points);

// Unique undirected edges (min,max), sorted.
std::vector<std::pair<int, int>> triangulation_edges(const std::vector<Triangle>& tris);

// Convex hull boundary via monotone chain, CCW order. Collinear boundary
// points are kept: with h counting every point on the hull boundary, a
// triangulation of n points satisfies T = 2n - h - 2 and E = (3T + h) / 2.
std::vector<int> convex_hull_indices(const std::vector<std::pair<double, double>>& points);

} // namespace congestnet
