#pragma once

#include <string>
#include <vector>

namespace congestnet {

// All correlation statistics are computed in double. A statistic that is
// undefined (zero variance in either argument, or fewer than two samples)
// is returned as quiet NaN; JSON serialization renders it as null.

double pearson(const std::vector<double>& a, const std::vector<double>& b);

// 1-based mid-ranks; tied values share the mean of the ranks they occupy.
std::vector<double> midranks(const std::vector<double>& v);

// Spearman rho = Pearson correlation of the mid-ranks.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

// Kendall tau-b, O(n^2) pair scan:
//   tau = (C - D) / sqrt((C + D + Ta) * (C + D + Tb))
// where Ta/Tb count pairs tied only in a / only in b; pairs tied in both are
// excluded from every term.
double kendall(const std::vector<double>& a, const std::vector<double>& b);

struct DesignMetrics {
    std::string name;
    int n = 0;
    double pearson = 0.0;
    double spearman = 0.0;
    double kendall = 0.0;
};

struct EvalReport {
    DesignMetrics pooled;                   // name "pooled", all designs concatenated
    std::vector<DesignMetrics> per_design;  // one row per design, input order
};

EvalReport evaluate(const std::vector<std::string>& names,
                    const std::vector<std::vector<double>>& pred,
                    const std::vector<std::vector<double>>& target);

// {"pearson":..,"spearman":..,"kendall":..,"n":..,"per_design":[{...}]}
std::string report_to_json(const EvalReport& r);

// Fixed-width human-readable table; per-design rows only when requested.
std::string report_table(const EvalReport& r, bool per_design_rows);

} // namespace congestnet
