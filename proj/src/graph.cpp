#include "congestnet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

#include "congestnet/delaunay.hpp"
#include "congestnet/rng.hpp"
#include "congestnet/textio.hpp"

namespace congestnet {

DensityGrids density_grids(const Netlist& nl, const Placement& pl, const GridSpec& grid) {
    const size_t n_tiles = static_cast<size_t>(grid.nx) * grid.ny;
    DensityGrids g{LabelGrid{grid, std::vector<double>(n_tiles, 0.0)},
                   LabelGrid{grid, std::vector<double>(n_tiles, 0.0)},
                   LabelGrid{grid, std::vector<double>(n_tiles, 0.0)}};

    const double tile_area = grid.tile_w * grid.tile_h;
    for (size_t i = 0; i < nl.cells.size(); ++i) {
        const Cell& c = nl.cells[i];
        const auto [x, y] = pl.positions[i];
        for (const auto& [dx, dy] : c.pin_offsets)
            g.pin.at(tile_ix(grid, x + dx), tile_iy(grid, y + dy)) += 1.0;

        const int ix_lo = tile_ix(grid, x);
        const int ix_hi = tile_ix(grid, x + c.width);
        const int iy_lo = tile_iy(grid, y);
        const int iy_hi = tile_iy(grid, y + c.height);
        for (int iy = iy_lo; iy <= iy_hi; ++iy) {
            const double ty0 = grid.y0 + iy * grid.tile_h;
            const double oy = std::min(ty0 + grid.tile_h, y + c.height) - std::max(ty0, y);
            if (oy <= 0.0) continue;
            for (int ix = ix_lo; ix <= ix_hi; ++ix) {
                const double tx0 = grid.x0 + ix * grid.tile_w;
                const double ox = std::min(tx0 + grid.tile_w, x + c.width) - std::max(tx0, x);
                if (ox <= 0.0) continue;
                g.cell.at(ix, iy) += (ox * oy) / tile_area;
            }
        }
    }
    g.net = rudy_label_grid(nl, pl, grid);
    return g;
}

Tensor<double> topology_node_features(const Netlist& nl, const Placement& pl,
                                      const DensityGrids& grids) {
    const int n = static_cast<int>(nl.cells.size());
    Tensor<double> x({n, 7});
    std::vector<double> degree(n, 0.0), fanout_sum(n, 0.0);
    std::vector<int> mark(n, -1);
    for (const Net& net : nl.nets) {
        for (const NetPin& p : net.pins) {
            if (mark[p.cell] == net.id) continue; // one count per incident net
            mark[p.cell] = net.id;
            degree[p.cell] += 1.0;
            fanout_sum[p.cell] += static_cast<double>(net.pins.size());
        }
    }
    const GridSpec& grid = grids.pin.grid;
    for (int i = 0; i < n; ++i) {
        const Cell& c = nl.cells[i];
        const auto [cx, cy] = cell_center(nl, pl, i);
        const int ix = tile_ix(grid, cx);
        const int iy = tile_iy(grid, cy);
        x.at(i, 0) = grids.pin.at(ix, iy);
        x.at(i, 1) = grids.cell.at(ix, iy);
        x.at(i, 2) = grids.net.at(ix, iy);
        x.at(i, 3) = c.width * c.height;
        x.at(i, 4) = static_cast<double>(c.pin_offsets.size());
        x.at(i, 5) = degree[i];
        x.at(i, 6) = fanout_sum[i];
    }
    return x;
}

Graph build_topology_edges(const Netlist& nl, int clique_cap) {
    if (clique_cap < 2) throw std::invalid_argument("topology: clique_cap must be >= 2");
    std::set<std::pair<int, int>> edges;
    std::vector<int> distinct;
    for (const Net& net : nl.nets) {
        distinct.clear();
        for (const NetPin& p : net.pins)
            if (std::find(distinct.begin(), distinct.end(), p.cell) == distinct.end())
                distinct.push_back(p.cell);
        const int p = static_cast<int>(net.pins.size());
        if (p <= clique_cap) {
            for (size_t i = 0; i < distinct.size(); ++i)
                for (size_t j = i + 1; j < distinct.size(); ++j) {
                    edges.insert({distinct[i], distinct[j]});
                    edges.insert({distinct[j], distinct[i]});
                }
        } else {
            const int driver = distinct[0]; // first-listed pin's cell
            for (size_t j = 1; j < distinct.size(); ++j) {
                edges.insert({driver, distinct[j]});
                edges.insert({distinct[j], driver});
            }
        }
    }
    Graph g;
    g.n_nodes = static_cast<int>(nl.cells.size());
    g.edges.assign(edges.begin(), edges.end());
    return g;
}

namespace {

std::pair<double, double> jitter_of(int cell_id, int round, double magnitude) {
    Rng r((static_cast<uint64_t>(round) << 32) ^ static_cast<uint64_t>(cell_id) ^
          0x6a697474ULL);
    return {(2.0 * r.uniform() - 1.0) * magnitude, (2.0 * r.uniform() - 1.0) * magnitude};
}

} // namespace

Graph build_geometry_graph(const Netlist& nl, const Placement& pl) {
    const int n = static_cast<int>(nl.cells.size());
    if (n < 3) throw std::runtime_error("geometry: need at least 3 cells");
    std::vector<std::pair<double, double>> centers(n);
    for (int i = 0; i < n; ++i) centers[i] = cell_center(nl, pl, i);
    const double die_w = pl.die.width();
    const double mag = 1e-6 * die_w;

    // coincident centers get a per-cell deterministic nudge
    std::vector<std::pair<double, double>> pts = centers;
    {
        std::map<std::pair<double, double>, int> count;
        for (const auto& p : pts) ++count[p];
        for (int i = 0; i < n; ++i)
            if (count[centers[i]] > 1) {
                const auto [jx, jy] = jitter_of(i, 0, mag);
                pts[i] = {centers[i].first + jx, centers[i].second + jy};
            }
    }

    std::vector<Triangle> tris;
    for (int round = 0;; ++round) {
        try {
            tris = delaunay_triangulate(pts);
            break;
        } catch (const std::runtime_error&) {
            if (round >= 3) throw;
            // collinear layout (e.g. a single row): jitter every point
            for (int i = 0; i < n; ++i) {
                const auto [jx, jy] = jitter_of(i, round + 1, mag * std::pow(10.0, round));
                pts[i] = {centers[i].first + jx, centers[i].second + jy};
            }
        }
    }

    std::vector<std::tuple<int, int, double>> dir;
    for (const auto& [u, v] : triangulation_edges(tris)) {
        const double dx = centers[u].first - centers[v].first;
        const double dy = centers[u].second - centers[v].second;
        const double d = std::max(std::hypot(dx, dy), 1e-9 * die_w);
        dir.emplace_back(u, v, d);
        dir.emplace_back(v, u, d);
    }
    std::sort(dir.begin(), dir.end());
    Graph g;
    g.n_nodes = n;
    g.edges.reserve(dir.size());
    g.edge_attr.reserve(dir.size());
    for (const auto& [u, v, d] : dir) {
        g.edges.emplace_back(u, v);
        g.edge_attr.push_back(d);
    }
    return g;
}

MultiViewGraph assemble_multiview(const Netlist& nl, const Placement& pl, const GridSpec& grid,
                                  int clique_cap) {
    MultiViewGraph mv;
    const DensityGrids grids = density_grids(nl, pl, grid);
    mv.x_t = topology_node_features(nl, pl, grids);
    mv.topo = build_topology_edges(nl, clique_cap);
    mv.geo = build_geometry_graph(nl, pl);

    const int n = static_cast<int>(nl.cells.size());
    mv.coords = Tensor<double>({n, 2});
    for (int i = 0; i < n; ++i) {
        const auto [cx, cy] = cell_center(nl, pl, i);
        mv.coords.at(i, 0) = (cx - pl.die.x0) / pl.die.width();
        mv.coords.at(i, 1) = (cy - pl.die.y0) / pl.die.height();
    }
    mv.x_g = Tensor<double>({n, mv.x_t.shape[1] + 2});
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < mv.x_t.shape[1]; ++j) mv.x_g.at(i, j) = mv.x_t.at(i, j);
        mv.x_g.at(i, mv.x_t.shape[1]) = mv.coords.at(i, 0);
        mv.x_g.at(i, mv.x_t.shape[1] + 1) = mv.coords.at(i, 1);
    }
    return mv;
}

std::string export_graph(const Graph& g) {
    std::string out;
    const bool with_attr = !g.edge_attr.empty();
    for (size_t e = 0; e < g.edges.size(); ++e) {
        out += "edge " + std::to_string(g.edges[e].first) + " " +
               std::to_string(g.edges[e].second);
        if (with_attr) out += " " + fmt_double(g.edge_attr[e]);
        out += '\n';
    }
    return out;
}

std::string export_matrix(const Tensor<double>& m) {
    if (m.rank() != 2) throw std::invalid_argument("export_matrix: rank-2 tensor required");
    std::string out = "mat " + std::to_string(m.shape[0]) + " " + std::to_string(m.shape[1]) +
                      "\n";
    for (int i = 0; i < m.shape[0]; ++i) {
        for (int j = 0; j < m.shape[1]; ++j) {
            if (j) out += ' ';
            out += fmt_double(m.at(i, j));
        }
        out += '\n';
    }
    return out;
}

} // namespace congestnet
