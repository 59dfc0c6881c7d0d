#include "congestnet/circuit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "congestnet/rng.hpp"
#include "congestnet/textio.hpp"

namespace congestnet {

namespace {

using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

int line_of_byte(const std::string& text, size_t byte) {
    int line = 1;
    for (size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

double parse_double_token(const char* first, const char* last, const std::string& where) {
    double v = 0.0;
    const auto r = std::from_chars(first, last, v);
    if (r.ec != std::errc() || r.ptr != last)
        fail("labels: bad number '" + std::string(first, last) + "' " + where);
    return v;
}

} // namespace

// ---------------------------------------------------------------------------
// Grid helpers
// ---------------------------------------------------------------------------

GridSpec make_grid(const Die& die, int nx, int ny) {
    if (nx < 1 || ny < 1) fail("grid: nx and ny must be >= 1");
    if (!(die.x1 > die.x0) || !(die.y1 > die.y0)) fail("grid: empty die");
    return GridSpec{die.x0, die.y0, die.width() / nx, die.height() / ny, nx, ny};
}

namespace {

int tile_index(double coord, double origin, double tile, int count, const char* axis) {
    const double t = (coord - origin) / tile;
    const double tol = 1e-9 * std::max(1.0, static_cast<double>(count));
    if (!(t >= -tol) || t > count + tol)
        fail(std::string("grid: ") + axis + " coordinate " + fmt_double(coord) +
             " outside grid");
    int i = static_cast<int>(std::floor(t));
    if (i < 0) i = 0;
    if (i >= count) i = count - 1;
    return i;
}

} // namespace

int tile_ix(const GridSpec& g, double x) { return tile_index(x, g.x0, g.tile_w, g.nx, "x"); }
int tile_iy(const GridSpec& g, double y) { return tile_index(y, g.y0, g.tile_h, g.ny, "y"); }

std::pair<double, double> cell_center(const Netlist& nl, const Placement& pl, int cell) {
    const Cell& c = nl.cells[cell];
    const auto [x, y] = pl.positions[cell];
    return {x + c.width / 2.0, y + c.height / 2.0};
}

std::pair<double, double> pin_position(const Netlist& nl, const Placement& pl, const NetPin& p) {
    const auto [x, y] = pl.positions[p.cell];
    const auto [dx, dy] = nl.cells[p.cell].pin_offsets[p.pin];
    return {x + dx, y + dy};
}

// ---------------------------------------------------------------------------
// Netlist JSON
// ---------------------------------------------------------------------------

Netlist parse_netlist(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail("netlist: syntax error at line " + std::to_string(line_of_byte(text, e.byte)) +
             ": " + e.what());
    }
    Netlist nl;
    std::unordered_map<std::string, int> by_name;
    try {
        nl.name = j.at("name").get<std::string>();
        for (const auto& jc : j.at("cells")) {
            Cell c;
            c.id = static_cast<int>(nl.cells.size());
            c.name = jc.at("name").get<std::string>();
            c.width = jc.at("w").get<double>();
            c.height = jc.at("h").get<double>();
            if (!(c.width > 0.0) || !(c.height > 0.0))
                fail("netlist: cell '" + c.name + "' has non-positive size");
            for (const auto& jp : jc.at("pins"))
                c.pin_offsets.emplace_back(jp.at("dx").get<double>(), jp.at("dy").get<double>());
            if (c.pin_offsets.empty()) fail("netlist: cell '" + c.name + "' has no pins");
            for (const auto& [dx, dy] : c.pin_offsets)
                if (dx < 0.0 || dx > c.width || dy < 0.0 || dy > c.height)
                    fail("netlist: cell '" + c.name + "' pin offset outside cell");
            if (!by_name.emplace(c.name, c.id).second)
                fail("netlist: duplicate cell name '" + c.name + "'");
            nl.cells.push_back(std::move(c));
        }
        for (const auto& jn : j.at("nets")) {
            Net n;
            n.id = static_cast<int>(nl.nets.size());
            n.name = jn.at("name").get<std::string>();
            std::set<std::pair<int, int>> seen;
            for (const auto& jp : jn.at("pins")) {
                const std::string cname = jp.at("cell").get<std::string>();
                const auto it = by_name.find(cname);
                if (it == by_name.end())
                    fail("netlist: net '" + n.name + "': unknown cell '" + cname + "'");
                const int pin = jp.at("pin").get<int>();
                const int npins = static_cast<int>(nl.cells[it->second].pin_offsets.size());
                if (pin < 0 || pin >= npins)
                    fail("netlist: net '" + n.name + "': dangling pin reference '" + cname +
                         "' pin " + std::to_string(pin));
                if (!seen.emplace(it->second, pin).second)
                    fail("netlist: net '" + n.name + "': duplicate pin '" + cname + "' pin " +
                         std::to_string(pin));
                n.pins.push_back(NetPin{it->second, pin});
            }
            if (n.pins.size() < 2) fail("netlist: net '" + n.name + "': net arity < 2");
            nl.nets.push_back(std::move(n));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(std::string("netlist: malformed document: ") + e.what());
    }
    return nl;
}

std::string serialize_netlist(const Netlist& nl) {
    ordered_json j;
    j["name"] = nl.name;
    j["cells"] = ordered_json::array();
    for (const Cell& c : nl.cells) {
        ordered_json jc;
        jc["name"] = c.name;
        jc["w"] = c.width;
        jc["h"] = c.height;
        jc["pins"] = ordered_json::array();
        for (const auto& [dx, dy] : c.pin_offsets)
            jc["pins"].push_back(ordered_json{{"dx", dx}, {"dy", dy}});
        j["cells"].push_back(std::move(jc));
    }
    j["nets"] = ordered_json::array();
    for (const Net& n : nl.nets) {
        ordered_json jn;
        jn["name"] = n.name;
        jn["pins"] = ordered_json::array();
        for (const NetPin& p : n.pins)
            jn["pins"].push_back(ordered_json{{"cell", nl.cells[p.cell].name}, {"pin", p.pin}});
        j["nets"].push_back(std::move(jn));
    }
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Placement JSON
// ---------------------------------------------------------------------------

Placement parse_placement(const std::string& text, const Netlist& nl) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail("placement: syntax error at line " + std::to_string(line_of_byte(text, e.byte)) +
             ": " + e.what());
    }
    Placement pl;
    std::unordered_map<std::string, int> by_name;
    for (const Cell& c : nl.cells) by_name.emplace(c.name, c.id);
    std::vector<char> seen(nl.cells.size(), 0);
    try {
        const auto& jd = j.at("die");
        if (!jd.is_array() || jd.size() != 4) fail("placement: die must be [x0,y0,x1,y1]");
        pl.die = Die{jd[0].get<double>(), jd[1].get<double>(), jd[2].get<double>(),
                     jd[3].get<double>()};
        if (!(pl.die.x1 > pl.die.x0) || !(pl.die.y1 > pl.die.y0))
            fail("placement: empty die");
        pl.positions.assign(nl.cells.size(), {0.0, 0.0});
        for (const auto& jc : j.at("cells")) {
            const std::string name = jc.at("name").get<std::string>();
            const auto it = by_name.find(name);
            if (it == by_name.end()) fail("placement: unknown cell '" + name + "'");
            if (seen[it->second]) fail("placement: duplicate cell '" + name + "'");
            seen[it->second] = 1;
            pl.positions[it->second] = {jc.at("x").get<double>(), jc.at("y").get<double>()};
        }
    } catch (const nlohmann::json::exception& e) {
        fail(std::string("placement: malformed document: ") + e.what());
    }
    for (size_t i = 0; i < seen.size(); ++i)
        if (!seen[i])
            fail("placement incomplete: no position for cell '" + nl.cells[i].name + "'");
    for (size_t i = 0; i < nl.cells.size(); ++i) {
        const auto [x, y] = pl.positions[i];
        const Cell& c = nl.cells[i];
        if (x < pl.die.x0 || y < pl.die.y0 || x + c.width > pl.die.x1 ||
            y + c.height > pl.die.y1)
            fail("placement: cell '" + c.name + "' outside die");
    }
    return pl;
}

std::string serialize_placement(const Placement& pl, const Netlist& nl) {
    ordered_json j;
    j["die"] = ordered_json::array({pl.die.x0, pl.die.y0, pl.die.x1, pl.die.y1});
    j["cells"] = ordered_json::array();
    for (size_t i = 0; i < nl.cells.size(); ++i)
        j["cells"].push_back(ordered_json{{"name", nl.cells[i].name},
                                          {"x", pl.positions[i].first},
                                          {"y", pl.positions[i].second}});
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Label grid text format
// ---------------------------------------------------------------------------

std::string serialize_label_grid(const LabelGrid& lg) {
    const GridSpec& g = lg.grid;
    std::string out = "grid " + fmt_double(g.x0) + " " + fmt_double(g.y0) + " " +
                      fmt_double(g.tile_w) + " " + fmt_double(g.tile_h) + " " +
                      std::to_string(g.nx) + " " + std::to_string(g.ny) + "\n";
    for (int iy = 0; iy < g.ny; ++iy) { // row 0 = bottom, written first
        for (int ix = 0; ix < g.nx; ++ix) {
            if (ix) out += ' ';
            out += fmt_double(lg.at(ix, iy));
        }
        out += '\n';
    }
    return out;
}

namespace {

std::vector<std::pair<const char*, const char*>> split_ws(const char* b, const char* e) {
    std::vector<std::pair<const char*, const char*>> toks;
    const char* p = b;
    while (p < e) {
        while (p < e && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
        const char* s = p;
        while (p < e && *p != ' ' && *p != '\t' && *p != '\r') ++p;
        if (p > s) toks.emplace_back(s, p);
    }
    return toks;
}

} // namespace

LabelGrid parse_label_grid(const std::string& text) {
    std::vector<std::pair<const char*, const char*>> lines;
    {
        const char* p = text.data();
        const char* end = p + text.size();
        while (p < end) {
            const char* nl = std::find(p, end, '\n');
            lines.emplace_back(p, nl);
            p = nl < end ? nl + 1 : end;
        }
    }
    if (lines.empty()) fail("labels: empty file");
    auto head = split_ws(lines[0].first, lines[0].second);
    if (head.size() != 7 || std::string(head[0].first, head[0].second) != "grid")
        fail("labels: bad header at line 1 (want 'grid x0 y0 tile_w tile_h nx ny')");
    GridSpec g;
    g.x0 = parse_double_token(head[1].first, head[1].second, "in header");
    g.y0 = parse_double_token(head[2].first, head[2].second, "in header");
    g.tile_w = parse_double_token(head[3].first, head[3].second, "in header");
    g.tile_h = parse_double_token(head[4].first, head[4].second, "in header");
    g.nx = static_cast<int>(parse_double_token(head[5].first, head[5].second, "in header"));
    g.ny = static_cast<int>(parse_double_token(head[6].first, head[6].second, "in header"));
    if (g.nx < 1 || g.ny < 1 || !(g.tile_w > 0.0) || !(g.tile_h > 0.0))
        fail("labels: invalid grid header");
    LabelGrid lg{g, std::vector<double>(static_cast<size_t>(g.nx) * g.ny, 0.0)};
    for (int iy = 0; iy < g.ny; ++iy) {
        const int lineno = iy + 2;
        if (static_cast<size_t>(iy + 1) >= lines.size())
            fail("labels: missing row at line " + std::to_string(lineno));
        auto toks = split_ws(lines[iy + 1].first, lines[iy + 1].second);
        if (static_cast<int>(toks.size()) != g.nx)
            fail("labels: expected " + std::to_string(g.nx) + " values at line " +
                 std::to_string(lineno) + ", got " + std::to_string(toks.size()));
        for (int ix = 0; ix < g.nx; ++ix) {
            const double v = parse_double_token(toks[ix].first, toks[ix].second,
                                                "at line " + std::to_string(lineno));
            if (!std::isfinite(v) || v < 0.0)
                fail("labels: negative or non-finite value at line " + std::to_string(lineno));
            lg.at(ix, iy) = v;
        }
    }
    return lg;
}

// ---------------------------------------------------------------------------
// Synthetic designs
// ---------------------------------------------------------------------------

namespace {

// Greedy left-to-right row fill in shuffled order; returns positions indexed by
// cell id, or nullopt if the rows overflow with this gap scale.
std::optional<std::vector<std::pair<double, double>>> try_place_rows(
    const std::vector<Cell>& cells, const std::vector<int>& order, double die_side, int n_rows,
    double gap_mean, Rng rng) {
    std::vector<std::pair<double, double>> pos(cells.size());
    int row = 0;
    double x = 0.0;
    for (int idx : order) {
        const double w = cells[idx].width;
        if (w > die_side) return std::nullopt;
        const double gap = gap_mean > 0.0 ? rng.uniform(0.0, 2.0 * gap_mean) : 0.0;
        if (x + gap + w <= die_side) {
            x += gap;
        } else {
            ++row;
            if (row >= n_rows) return std::nullopt;
            x = 0.0;
            if (x + w > die_side) return std::nullopt;
        }
        pos[idx] = {x, static_cast<double>(row)};
        x += w;
    }
    return pos;
}

} // namespace

std::pair<Netlist, Placement> generate_synthetic(uint64_t seed, int n_cells, double rent_p,
                                                 double die_side) {
    if (n_cells < 4) fail("generate_synthetic: n_cells too small (need >= 4)");
    if (!(rent_p > 0.0) || !(rent_p < 1.0))
        fail("generate_synthetic: rent_p must lie in (0,1)");
    if (!(die_side > 0.0)) fail("generate_synthetic: die_side must be positive");

    Rng rng(seed);
    Netlist nl;
    nl.name = "syn_s" + std::to_string(seed) + "_n" + std::to_string(n_cells);

    nl.cells.reserve(n_cells);
    for (int i = 0; i < n_cells; ++i) {
        Cell c;
        c.id = i;
        c.name = "c" + std::to_string(i);
        c.width = rng.uniform(0.6, 1.8);
        c.height = 1.0;
        nl.cells.push_back(std::move(c)); // pin counts assigned after placement
    }

    // --- legal row placement -------------------------------------------------
    const int n_rows = static_cast<int>(std::floor(die_side)); // row height 1.0
    if (n_rows < 1) fail("generate_synthetic: die too small to place all cells");
    double total_w = 0.0;
    for (const Cell& c : nl.cells) total_w += c.width;
    const double capacity = die_side * n_rows;
    if (total_w > 0.95 * capacity)
        fail("generate_synthetic: die too small to place all cells");

    std::vector<int> order(n_cells);
    for (int i = 0; i < n_cells; ++i) order[i] = i;
    for (int i = n_cells - 1; i > 0; --i)
        std::swap(order[i], order[rng.uniform_int(0, i)]);

    const double slack = capacity - total_w;
    Placement pl;
    pl.die = Die{0.0, 0.0, die_side, die_side};
    bool placed = false;
    for (double gscale : {0.9, 0.5, 0.25, 0.0}) {
        const double gap_mean = slack / (n_cells + n_rows) * gscale;
        auto pos = try_place_rows(nl.cells, order, die_side, n_rows, gap_mean,
                                  rng.fork(static_cast<uint64_t>(gscale * 100.0)));
        if (pos) {
            pl.positions = std::move(*pos);
            placed = true;
            break;
        }
    }
    if (!placed) fail("generate_synthetic: die too small to place all cells");

    // --- pin counts -----------------------------------------------------------
    std::vector<std::pair<double, double>> center(n_cells);
    for (int i = 0; i < n_cells; ++i) center[i] = cell_center(nl, pl, i);

    // Pin counts follow a blockwise region field, the way cells drawn from one
    // library corner dominate a floorplan region: an 8x8 grid of blocks is
    // each either pin-light (2-3 pins) or pin-heavy (5-6 pins).  Pin count
    // stays in the 2..6 range; bounding boxes — and therefore labels — do not
    // depend on it.
    std::vector<int> blk(n_cells);
    {
        constexpr int kB = 8;
        std::vector<char> heavy(kB * kB);
        for (char& h : heavy) h = rng.uniform() < 0.5 ? 1 : 0;
        for (int i = 0; i < n_cells; ++i) {
            const auto [cx, cy] = center[i];
            const int bx = std::min(kB - 1, static_cast<int>(kB * (cx - pl.die.x0) / die_side));
            const int by = std::min(kB - 1, static_cast<int>(kB * (cy - pl.die.y0) / die_side));
            blk[static_cast<size_t>(i)] = by * kB + bx;
            const int base = heavy[static_cast<size_t>(by * kB + bx)] ? 5 : 2;
            const int np = base + static_cast<int>(rng.uniform_int(0, 1));
            Cell& c = nl.cells[static_cast<size_t>(i)];
            c.pin_offsets.reserve(static_cast<size_t>(np));
            for (int p = 0; p < np; ++p)
                c.pin_offsets.emplace_back(rng.uniform(0.0, c.width), rng.uniform(0.0, 1.0));
        }
    }

    // --- nets -----------------------------------------------------------------

    // Each cell is latently either "clustered" (~50%) or "spread", the way a
    // design mixes tightly coupled datapath bits with control logic.  The two
    // populations wire among themselves:
    //  - cluster nets: 3-4 pins, a clustered driver plus its nearest clustered
    //    cells.  Their one-tile bounding boxes stack wiring density on exactly
    //    the members' tiles, so the fine-scale label at a clustered cell tracks
    //    its net count.  The placement is generated first and never reflects
    //    the type, and driver-rate fractions are chosen so expected degree
    //    matches across types — only connectivity tells the types apart.
    //  - stretch nets: fanout ~ zipf(2..32), members by Gaussian displacement
    //    from a spread driver (rent_p widens the radius and the far tail).
    //    Their larger bounding boxes lay a smooth low-density background.
    const int max_fanout = std::min(32, n_cells);
    std::vector<double> fanout_cdf;
    {
        double acc = 0.0;
        for (int k = 2; k <= max_fanout; ++k) {
            acc += std::pow(static_cast<double>(k), -2.0);
            fanout_cdf.push_back(acc);
        }
        for (double& v : fanout_cdf) v /= acc;
    }
    const double sigma = die_side * (0.10 + 0.10 * rent_p);
    const double p_long = 0.02;

    // latent per-cell population and per-population driver activity (bimodal:
    // a quarter of either population drives most of its nets)
    std::vector<char> clustered(n_cells);
    std::vector<int> pop[2]; // 0 = spread, 1 = clustered
    for (int i = 0; i < n_cells; ++i) {
        clustered[static_cast<size_t>(i)] = rng.uniform() < 0.62 ? 1 : 0;
        pop[clustered[static_cast<size_t>(i)]].push_back(i);
    }
    // keep both populations large enough to form legal nets (arity >= 2)
    const size_t min_pop = static_cast<size_t>(std::min(4, n_cells / 2));
    for (int t : {0, 1})
        while (pop[t].size() < min_pop && pop[1 - t].size() > min_pop) {
            const int moved = pop[1 - t].back();
            pop[1 - t].pop_back();
            pop[t].push_back(moved);
            clustered[static_cast<size_t>(moved)] = static_cast<char>(t);
        }
    std::vector<double> drv_cdf[2];
    for (int t : {0, 1}) {
        double acc = 0.0;
        drv_cdf[t].reserve(pop[t].size());
        for (size_t k = 0; k < pop[t].size(); ++k) {
            acc += rng.uniform() < 0.25 ? 1.0 : 0.1;
            drv_cdf[t].push_back(acc);
        }
    }
    auto pick_driver = [&](int t) {
        const double u = rng.uniform() * drv_cdf[t].back();
        const size_t k = static_cast<size_t>(
            std::upper_bound(drv_cdf[t].begin(), drv_cdf[t].end(), u) - drv_cdf[t].begin());
        return pop[t][std::min(k, pop[t].size() - 1)];
    };

    auto is_member = [](const std::vector<int>& m, int c) {
        return std::find(m.begin(), m.end(), c) != m.end();
    };
    // first non-member of the population scanning from a random start; total
    // and deterministic
    auto scan_pick = [&](const std::vector<int>& members, int t) {
        const int sz = static_cast<int>(pop[t].size());
        const int start = static_cast<int>(rng.uniform_int(0, sz - 1));
        for (int s = 0; s < sz; ++s) {
            const int c = pop[t][static_cast<size_t>((start + s) % sz)];
            if (!is_member(members, c)) return c;
        }
        return -1;
    };
    // nearest non-member of the population to a target point; total and
    // deterministic.  b >= 0 restricts candidates to one pin-field block.
    auto nearest_pick = [&](const std::vector<int>& members, int t, double tx, double ty,
                            int b = -1) {
        int cand = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int c : pop[t]) {
            if (is_member(members, c)) continue;
            if (b >= 0 && blk[static_cast<size_t>(c)] != b) continue;
            const double dx = center[c].first - tx;
            const double dy = center[c].second - ty;
            const double d2 = dx * dx + dy * dy;
            if (d2 < best) {
                best = d2;
                cand = c;
            }
        }
        return cand;
    };

    // 0.70 of nets are cluster nets: at mean fanout 3.5 over 62% of the cells
    // versus mean fanout ~5.0 (zipf 2..32) over the other 38%, expected
    // degree matches across populations (~3.95 each), so degree alone does
    // not reveal a cell's type.
    const int n_nets = n_cells;
    const int n_cluster = static_cast<int>(0.70 * n_nets);
    nl.nets.reserve(n_nets);
    for (int j = 0; j < n_nets; ++j) {
        Net net;
        net.id = j;
        net.name = "n" + std::to_string(j);
        std::vector<int> members;
        const bool cluster = j < n_cluster;
        const int t = cluster ? 1 : 0;
        const int driver = pick_driver(t);
        members.push_back(driver);
        if (cluster) {
            // nearest clustered cells, preferring the driver's own pin-field
            // block: cells drawn from one library corner wire together
            const int fanout =
                std::min(3 + static_cast<int>(rng.uniform_int(0, 1)), static_cast<int>(pop[1].size()));
            const auto [cx, cy] = center[driver];
            while (static_cast<int>(members.size()) < fanout) {
                int cand = nearest_pick(members, t, cx, cy, blk[static_cast<size_t>(driver)]);
                if (cand < 0) cand = nearest_pick(members, t, cx, cy);
                members.push_back(cand < 0 ? scan_pick(members, t) : cand);
            }
        } else {
            const double u = rng.uniform();
            int fanout = 2;
            for (size_t k = 0; k < fanout_cdf.size(); ++k)
                if (u <= fanout_cdf[k]) {
                    fanout = 2 + static_cast<int>(k);
                    break;
                }
            fanout = std::min(fanout, static_cast<int>(pop[0].size()));
            while (static_cast<int>(members.size()) < fanout) {
                int cand = -1;
                if (rng.uniform() < p_long) {
                    for (int att = 0; att < 16 && cand < 0; ++att) {
                        const int sz = static_cast<int>(pop[0].size());
                        const int c = pop[0][static_cast<size_t>(rng.uniform_int(0, sz - 1))];
                        if (!is_member(members, c)) cand = c;
                    }
                } else {
                    // Gaussian displacement from the driver, then the nearest free cell
                    const auto [cx, cy] = center[driver];
                    const double ang = 2.0 * M_PI * rng.uniform();
                    const double rad = sigma * std::sqrt(-2.0 * std::log1p(-rng.uniform()));
                    cand = nearest_pick(members, t, cx + rad * std::cos(ang),
                                        cy + rad * std::sin(ang));
                }
                if (cand < 0) cand = scan_pick(members, t);
                members.push_back(cand);
            }
        }
        net.pins.reserve(members.size());
        for (int m : members) {
            const int np = static_cast<int>(nl.cells[m].pin_offsets.size());
            net.pins.push_back(NetPin{m, static_cast<int>(rng.uniform_int(0, np - 1))});
        }
        nl.nets.push_back(std::move(net));
    }
    return {std::move(nl), std::move(pl)};
}

// ---------------------------------------------------------------------------
// RUDY labels
// ---------------------------------------------------------------------------

LabelGrid rudy_label_grid(const Netlist& nl, const Placement& pl, const GridSpec& grid) {
    LabelGrid lg{grid, std::vector<double>(static_cast<size_t>(grid.nx) * grid.ny, 0.0)};
    const double eps = grid.tile_w;
    const double tile_area = grid.tile_w * grid.tile_h;
    for (const Net& net : nl.nets) {
        double bx0 = std::numeric_limits<double>::infinity(), by0 = bx0;
        double bx1 = -bx0, by1 = -by0;
        for (const NetPin& p : net.pins) {
            const auto [px, py] = pin_position(nl, pl, p);
            bx0 = std::min(bx0, px);
            bx1 = std::max(bx1, px);
            by0 = std::min(by0, py);
            by1 = std::max(by1, py);
        }
        const double w_raw = bx1 - bx0;
        const double h_raw = by1 - by0;
        if (w_raw < eps) { // widen about the center
            const double cx = (bx0 + bx1) / 2.0;
            bx0 = cx - eps / 2.0;
            bx1 = cx + eps / 2.0;
        }
        if (h_raw < eps) {
            const double cy = (by0 + by1) / 2.0;
            by0 = cy - eps / 2.0;
            by1 = cy + eps / 2.0;
        }
        const double a = std::max(w_raw, eps) * std::max(h_raw, eps);
        const double dens = (w_raw + h_raw) / a;
        if (dens == 0.0) continue;

        const int ix_lo = std::clamp(
            static_cast<int>(std::floor((bx0 - grid.x0) / grid.tile_w)), 0, grid.nx - 1);
        const int ix_hi = std::clamp(
            static_cast<int>(std::floor((bx1 - grid.x0) / grid.tile_w)), 0, grid.nx - 1);
        const int iy_lo = std::clamp(
            static_cast<int>(std::floor((by0 - grid.y0) / grid.tile_h)), 0, grid.ny - 1);
        const int iy_hi = std::clamp(
            static_cast<int>(std::floor((by1 - grid.y0) / grid.tile_h)), 0, grid.ny - 1);
        for (int iy = iy_lo; iy <= iy_hi; ++iy) {
            const double ty0 = grid.y0 + iy * grid.tile_h;
            const double oy = std::min(ty0 + grid.tile_h, by1) - std::max(ty0, by0);
            if (oy <= 0.0) continue;
            for (int ix = ix_lo; ix <= ix_hi; ++ix) {
                const double tx0 = grid.x0 + ix * grid.tile_w;
                const double ox = std::min(tx0 + grid.tile_w, bx1) - std::max(tx0, bx0);
                if (ox <= 0.0) continue;
                lg.at(ix, iy) += dens * (ox * oy) / tile_area;
            }
        }
    }
    return lg;
}

std::vector<double> sample_labels_at_cells(const LabelGrid& labels, const Netlist& nl,
                                           const Placement& pl) {
    std::vector<double> y(nl.cells.size(), 0.0);
    for (size_t i = 0; i < nl.cells.size(); ++i) {
        const auto [cx, cy] = cell_center(nl, pl, static_cast<int>(i));
        y[i] = labels.at(tile_ix(labels.grid, cx), tile_iy(labels.grid, cy));
    }
    return y;
}

} // namespace congestnet
