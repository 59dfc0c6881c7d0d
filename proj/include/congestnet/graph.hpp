#pragma once

#include <string>
#include <utility>
#include <vector>

#include "congestnet/circuit.hpp"
#include "congestnet/tensor.hpp"

namespace congestnet {

// Directed edge list; no self-loops (layers add the self contribution
// themselves), deduplicated and sorted by (src, dst).
struct Graph {
    int n_nodes = 0;
    std::vector<std::pair<int, int>> edges;
    std::vector<double> edge_attr; // empty, or one value per edge (distance)
};

// Two views over the same cells: net topology and placement geometry.
struct MultiViewGraph {
    Graph topo;          // clique/star expansion of nets
    Tensor<double> x_t;  // N x 7 handcrafted features
    Graph geo;           // Delaunay edges, both directions, distance attr
    Tensor<double> x_g;  // N x 9 = [x_t || coords]
    Tensor<double> coords; // N x 2 cell centers normalized to [0,1]^2
};

struct DensityGrids {
    LabelGrid pin;  // pins per tile
    LabelGrid cell; // occupied area per tile, in tile areas
    LabelGrid net;  // RUDY reused as a feature
};

DensityGrids density_grids(const Netlist& nl, const Placement& pl, const GridSpec& grid);

// N x 7 rows: [pin_density, cell_density, net_density at the cell's tile,
// cell area, pin count, degree (incident nets), fanout sum of incident nets].
Tensor<double> topology_node_features(const Netlist& nl, const Placement& pl,
                                      const DensityGrids& grids);

// Nets with <= clique_cap pins expand to a directed clique over their distinct
// cells; larger nets become a star around the first-listed cell.
Graph build_topology_edges(const Netlist& nl, int clique_cap);

// Delaunay over cell centers (deterministically jittered when coincident or
// collinear); symmetric directed edges with center distances from the
// un-jittered coordinates, clamped below at 1e-9 x die width.
Graph build_geometry_graph(const Netlist& nl, const Placement& pl);

MultiViewGraph assemble_multiview(const Netlist& nl, const Placement& pl, const GridSpec& grid,
                                  int clique_cap);

// Debug exports: `edge src dst [dist]` lines; `mat N F` header plus rows.
std::string export_graph(const Graph& g);
std::string export_matrix(const Tensor<double>& m);

} // namespace congestnet
