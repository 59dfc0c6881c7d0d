#include "congestnet/delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

namespace congestnet {

double orient2d(std::pair<double, double> a, std::pair<double, double> b,
                std::pair<double, double> c) {
    return (b.first - a.first) * (c.second - a.second) -
           (b.second - a.second) * (c.first - a.first);
}

double incircle_det(std::pair<double, double> a, std::pair<double, double> b,
                    std::pair<double, double> c, std::pair<double, double> d) {
    const double adx = a.first - d.first, ady = a.second - d.second;
    const double bdx = b.first - d.first, bdy = b.second - d.second;
    const double cdx = c.first - d.first, cdy = c.second - d.second;
    const double ad = adx * adx + ady * ady;
    const double bd = bdx * bdx + bdy * bdy;
    const double cd = cdx * cdx + cdy * cdy;
    return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) +
           ad * (bdx * cdy - bdy * cdx);
}

namespace {

Triangle canon(Triangle t) { // rotate so the smallest vertex leads, orientation kept
    if (t.b < t.a && t.b < t.c) return {t.b, t.c, t.a};
    if (t.c < t.a && t.c < t.b) return {t.c, t.a, t.b};
    return t;
}

std::pair<int, int> undirected(int u, int v) { return {std::min(u, v), std::max(u, v)}; }

// Flip exactly-cocircular convex quads until every kept diagonal is the
// lexicographically smallest (min,max) pair; each flip strictly shrinks one
// edge in that order, so the loop terminates.
void canonicalize_ties(std::vector<Triangle>& tris,
                       const std::vector<std::pair<double, double>>& pts, double tol) {
    bool flipped = true;
    while (flipped) {
        flipped = false;
        // undirected edge -> (triangle index, opposite vertex), deterministic order
        std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> adj;
        for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
            const Triangle& tr = tris[t];
            adj[undirected(tr.a, tr.b)].push_back({t, tr.c});
            adj[undirected(tr.b, tr.c)].push_back({t, tr.a});
            adj[undirected(tr.c, tr.a)].push_back({t, tr.b});
        }
        for (const auto& [edge, owners] : adj) {
            if (owners.size() != 2) continue;
            const int x = owners[0].second, y = owners[1].second;
            const auto diag = undirected(x, y);
            if (diag >= edge) continue; // already the smallest diagonal
            const int t1 = owners[0].first, t2 = owners[1].first;
            const Triangle& tr1 = tris[t1];
            if (std::abs(incircle_det(pts[tr1.a], pts[tr1.b], pts[tr1.c], pts[y])) > tol)
                continue; // genuine Delaunay edge, not a tie
            const auto [a, b] = edge;
            // strict convexity of quad a-x-b-y, otherwise the flip would overlap
            const double o1 = orient2d(pts[x], pts[y], pts[a]);
            const double o2 = orient2d(pts[x], pts[y], pts[b]);
            const double o3 = orient2d(pts[a], pts[b], pts[x]);
            const double o4 = orient2d(pts[a], pts[b], pts[y]);
            if (o1 * o2 >= 0.0 || o3 * o4 >= 0.0) continue;
            // orient the two new triangles CCW
            Triangle n1{x, y, a}, n2{y, x, b};
            if (orient2d(pts[n1.a], pts[n1.b], pts[n1.c]) < 0.0) std::swap(n1.b, n1.c);
            if (orient2d(pts[n2.a], pts[n2.b], pts[n2.c]) < 0.0) std::swap(n2.b, n2.c);
            tris[t1] = n1;
            tris[t2] = n2;
            flipped = true;
            break; // adjacency is stale, rebuild
        }
    }
}

} // namespace

std::vector<Triangle> delaunay_triangulate(const std::vector<std::pair<double, double>>& input) {
    // exact duplicates collapse to their first occurrence
    std::vector<std::pair<double, double>> pts;
    std::vector<int> orig;
    {
        std::map<std::pair<double, double>, int> seen;
        for (int i = 0; i < static_cast<int>(input.size()); ++i)
            if (seen.emplace(input[i], static_cast<int>(pts.size())).second) {
                pts.push_back(input[i]);
                orig.push_back(i);
            }
    }
    const int n = static_cast<int>(pts.size());
    if (n < 3)
        throw std::runtime_error("delaunay: degenerate point set (fewer than 3 distinct points)");

    double xmin = pts[0].first, xmax = xmin, ymin = pts[0].second, ymax = ymin;
    for (const auto& [x, y] : pts) {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
    }
    const double span = std::max(xmax - xmin, ymax - ymin);
    if (!(span > 0.0)) throw std::runtime_error("delaunay: degenerate point set");
    const double tol = 1e-9 * span * span;

    // The bounding structure is three symbolic vertices "at infinity" in fixed
    // directions (indices n, n+1, n+2).  A finite super-triangle would compute
    // the Delaunay triangulation of points-plus-supers, which loses any flat
    // hull triangle whose circumcircle reaches a super vertex; the symbolic
    // limit predicates below keep the finite part equal to the true Delaunay
    // triangulation of the input.
    static constexpr double kDirX[3] = {-2.0, 2.0, 0.0};
    static constexpr double kDirY[3] = {-1.0, -1.0, 2.0};
    auto super = [n](int v) { return v >= n; };
    auto cross = [](double ax, double ay, double bx, double by) { return ax * by - ay * bx; };

    // In-circle test against the (limit) circumcircle of triangle t, for a finite
    // probe point q.  Triangles are kept CCW; cyclic rotation preserves the sign.
    auto in_circum = [&](Triangle t, const std::pair<double, double>& q) -> bool {
        int v[3] = {t.a, t.b, t.c};
        const int ns = static_cast<int>(super(v[0])) + static_cast<int>(super(v[1])) +
                       static_cast<int>(super(v[2]));
        if (ns == 3) return true; // the initial triangle covers the whole plane
        auto rotate = [&v] {
            const int t0 = v[0];
            v[0] = v[1];
            v[1] = v[2];
            v[2] = t0;
        };
        if (ns == 0) return incircle_det(pts[v[0]], pts[v[1]], pts[v[2]], q) > tol;
        if (ns == 1) {
            while (!super(v[2])) rotate();
            // Circle through two finite points and one far vertex degenerates to
            // the open half-plane strictly left of the finite directed edge.
            return orient2d(pts[v[0]], pts[v[1]], q) > 0.0;
        }
        while (super(v[0])) rotate(); // ns == 2: one finite vertex, two directions
        const auto& w = pts[v[0]];
        const double bx = kDirX[v[1] - n], by = kDirY[v[1] - n];
        const double cx2 = kDirX[v[2] - n], cy2 = kDirY[v[2] - n];
        const double bb = bx * bx + by * by, cc = cx2 * cx2 + cy2 * cy2;
        // Leading term of the in-circle determinant as both far vertices recede:
        // an open half-plane through the finite vertex w.
        return (w.first - q.first) * (by * cc - bb * cy2) -
                   (w.second - q.second) * (bx * cc - bb * cx2) >
               0.0;
    };

    // Limit form of orient2d(u, v, q) with u/v possibly at infinity.
    auto orient_lim = [&](int u, int v, const std::pair<double, double>& q) -> double {
        const bool su = super(u), sv = super(v);
        if (!su && !sv) return orient2d(pts[u], pts[v], q);
        if (su && sv) return cross(kDirX[u - n], kDirY[u - n], kDirX[v - n], kDirY[v - n]);
        if (su)
            return cross(kDirX[u - n], kDirY[u - n], pts[v].first - q.first,
                         pts[v].second - q.second);
        return cross(kDirX[v - n], kDirY[v - n], q.first - pts[u].first,
                     q.second - pts[u].second);
    };

    std::vector<Triangle> tris{{n, n + 1, n + 2}};
    for (int p = 0; p < n; ++p) {
        std::vector<Triangle> keep;
        std::vector<Triangle> bad;
        keep.reserve(tris.size() + 2);
        for (const Triangle& t : tris) {
            if (in_circum(t, pts[p]))
                bad.push_back(t);
            else
                keep.push_back(t);
        }
        std::set<std::pair<int, int>> cavity;
        for (const Triangle& t : bad) {
            cavity.insert({t.a, t.b});
            cavity.insert({t.b, t.c});
            cavity.insert({t.c, t.a});
        }
        for (const Triangle& t : bad) { // boundary = directed edges with no twin in the cavity
            for (const auto& [u, v] : {std::pair{t.a, t.b}, std::pair{t.b, t.c},
                                       std::pair{t.c, t.a}}) {
                if (cavity.count({v, u})) continue;
                if (orient_lim(u, v, pts[p]) <= 0.0)
                    throw std::runtime_error("delaunay: triangulation failed (degenerate cavity)");
                keep.push_back({u, v, p});
            }
        }
        tris = std::move(keep);
    }

    std::vector<Triangle> out;
    for (const Triangle& t : tris)
        if (t.a < n && t.b < n && t.c < n) out.push_back(t);
    if (out.empty()) throw std::runtime_error("delaunay: degenerate point set (collinear)");

    canonicalize_ties(out, pts, tol);

    for (Triangle& t : out) {
        t = canon({orig[t.a], orig[t.b], orig[t.c]});
    }
    std::sort(out.begin(), out.end(), [](const Triangle& l, const Triangle& r) {
        return std::tie(l.a, l.b, l.c) < std::tie(r.a, r.b, r.c);
    });
    return out;
}

std::vector<std::pair<int, int>> triangulation_edges(const std::vector<Triangle>& tris) {
    std::set<std::pair<int, int>> s;
    for (const Triangle& t : tris) {
        s.insert(undirected(t.a, t.b));
        s.insert(undirected(t.b, t.c));
        s.insert(undirected(t.c, t.a));
    }
    return {s.begin(), s.end()};
}

std::vector<int> convex_hull_indices(const std::vector<std::pair<double, double>>& points) {
    const int n = static_cast<int>(points.size());
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int l, int r) { return points[l] < points[r]; });
    idx.erase(std::unique(idx.begin(), idx.end(),
                          [&](int l, int r) { return points[l] == points[r]; }),
              idx.end());
    const int m = static_cast<int>(idx.size());
    if (m <= 2) return idx;
    // pop only on strict right turns so collinear boundary points survive
    std::vector<int> hull;
    for (int pass = 0; pass < 2; ++pass) {
        const size_t base = hull.size();
        for (int k = 0; k < m; ++k) {
            const int i = idx[pass == 0 ? k : m - 1 - k];
            while (hull.size() >= base + 2 &&
                   orient2d(points[hull[hull.size() - 2]], points[hull[hull.size() - 1]],
                            points[i]) < 0.0)
                hull.pop_back();
            hull.push_back(i);
        }
        hull.pop_back(); // endpoint repeats as the next pass's start
    }
    // fully collinear inputs would list interior points twice; keep first visits
    std::vector<int> uniq;
    std::set<int> seen;
    for (int i : hull)
        if (seen.insert(i).second) uniq.push_back(i);
    return uniq;
}

} // namespace congestnet
