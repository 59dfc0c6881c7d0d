#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace congestnet {

// ---------------------------------------------------------------------------
// Circuit data model. All coordinates are layout length units; cell positions
// are lower-left corners; pin offsets are relative to the cell origin.
// ---------------------------------------------------------------------------

struct Cell {
    int id = 0;
    std::string name;
    double width = 0.0;
    double height = 0.0;
    std::vector<std::pair<double, double>> pin_offsets;
    bool fixed = false;

    bool operator==(const Cell&) const = default;
};

struct NetPin {
    int cell = 0;
    int pin = 0;

    bool operator==(const NetPin&) const = default;
};

struct Net {
    int id = 0;
    std::string name;
    std::vector<NetPin> pins; // >= 2, no duplicate (cell, pin) pair

    bool operator==(const Net&) const = default;
};

struct Netlist {
    std::string name;
    std::vector<Cell> cells; // ids contiguous 0..N-1
    std::vector<Net> nets;   // ids contiguous

    bool operator==(const Netlist&) const = default;
};

struct Die {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    bool operator==(const Die&) const = default;
};

struct Placement {
    Die die;
    std::vector<std::pair<double, double>> positions; // index-aligned with cells

    bool operator==(const Placement&) const = default;
};

// Uniform tile grid anchored at (x0, y0). Tiles are closed on their low edge:
// a coordinate exactly on a boundary belongs to the higher-index tile, and the
// die's far edge folds into the last tile.
struct GridSpec {
    double x0 = 0.0, y0 = 0.0;
    double tile_w = 0.0, tile_h = 0.0;
    int nx = 0, ny = 0;

    bool operator==(const GridSpec&) const = default;
};

struct LabelGrid {
    GridSpec grid;
    std::vector<double> values; // ny*nx, row-major, row 0 = bottom

    double& at(int ix, int iy) { return values[static_cast<size_t>(iy) * grid.nx + ix]; }
    double at(int ix, int iy) const { return values[static_cast<size_t>(iy) * grid.nx + ix]; }
};

// Grid with nx-by-ny tiles covering the die exactly.
GridSpec make_grid(const Die& die, int nx, int ny);

// Tile index of a coordinate; boundary coordinates go to the higher tile and
// the far die edge clamps into the last tile. Throws if outside the grid.
int tile_ix(const GridSpec& g, double x);
int tile_iy(const GridSpec& g, double y);

std::pair<double, double> cell_center(const Netlist& nl, const Placement& pl, int cell);
std::pair<double, double> pin_position(const Netlist& nl, const Placement& pl, const NetPin& p);

// ---------------------------------------------------------------------------
// File formats (see README): netlist and placement are JSON; the label grid is
// a text header `grid x0 y0 tile_w tile_h nx ny` followed by ny rows of nx
// floats, bottom row first. Parsers throw std::runtime_error with a message
// that includes the offending line or name.
// ---------------------------------------------------------------------------

Netlist parse_netlist(const std::string& text);
std::string serialize_netlist(const Netlist& nl);

Placement parse_placement(const std::string& text, const Netlist& nl);
std::string serialize_placement(const Placement& pl, const Netlist& nl);

LabelGrid parse_label_grid(const std::string& text);
std::string serialize_label_grid(const LabelGrid& lg);

// ---------------------------------------------------------------------------
// Synthetic designs and proxy congestion labels.
// ---------------------------------------------------------------------------

// Deterministic synthetic design: unit-height cells with 2-6 pins placed
// legally in rows, and ~n_cells nets with heavy-tailed fanout (2-32 pins) and
// locality-biased connectivity. rent_p in (0,1) shifts connectivity toward
// longer range (more cross-die nets, wider locality radius).
std::pair<Netlist, Placement> generate_synthetic(uint64_t seed, int n_cells, double rent_p,
                                                 double die_side);

// RUDY proxy congestion. Per net with pin bounding box (w, h): every tile
// overlapped by the box receives (w + h) / (max(w,eps) * max(h,eps)) *
// overlap_area / (tile_w * tile_h), eps = one tile width. Degenerate box
// dimensions are widened to eps about their center before the overlap pass.
LabelGrid rudy_label_grid(const Netlist& nl, const Placement& pl, const GridSpec& grid);

// y[i] = label value of the tile containing the center of cell i.
std::vector<double> sample_labels_at_cells(const LabelGrid& labels, const Netlist& nl,
                                           const Placement& pl);

} // namespace congestnet
