#include "congestnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace congestnet {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_pair(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("metrics: length mismatch");
}
} // namespace

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    check_pair(a, b);
    const size_t n = a.size();
    if (n < 2) return kNaN;
    double ma = 0.0, mb = 0.0;
    for (size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    if (va == 0.0 || vb == 0.0) return kNaN;
    return cov / (std::sqrt(va) * std::sqrt(vb));
}

std::vector<double> midranks(const std::vector<double>& v) {
    const size_t n = v.size();
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), size_t{0});
    std::sort(idx.begin(), idx.end(), [&](size_t i, size_t j) {
        return v[i] < v[j] || (v[i] == v[j] && i < j);
    });
    std::vector<double> rank(n, 0.0);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double mid = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (size_t k = i; k <= j; ++k) rank[idx[k]] = mid;
        i = j + 1;
    }
    return rank;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    check_pair(a, b);
    return pearson(midranks(a), midranks(b));
}

double kendall(const std::vector<double>& a, const std::vector<double>& b) {
    check_pair(a, b);
    const size_t n = a.size();
    if (n < 2) return kNaN;
    int64_t concordant = 0, discordant = 0, ties_a = 0, ties_b = 0;
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
            const double da = a[i] - a[j], db = b[i] - b[j];
            if (da == 0.0 && db == 0.0) continue; // tied in both: excluded
            if (da == 0.0)
                ++ties_a;
            else if (db == 0.0)
                ++ties_b;
            else if ((da > 0.0) == (db > 0.0))
                ++concordant;
            else
                ++discordant;
        }
    const double cd = static_cast<double>(concordant + discordant);
    const double denom = std::sqrt((cd + static_cast<double>(ties_a)) *
                                   (cd + static_cast<double>(ties_b)));
    if (denom == 0.0) return kNaN;
    return static_cast<double>(concordant - discordant) / denom;
}

EvalReport evaluate(const std::vector<std::string>& names,
                    const std::vector<std::vector<double>>& pred,
                    const std::vector<std::vector<double>>& target) {
    if (names.size() != pred.size() || names.size() != target.size())
        throw std::invalid_argument("evaluate: designs/predictions/targets length mismatch");
    EvalReport report;
    std::vector<double> all_pred, all_target;
    for (size_t k = 0; k < names.size(); ++k) {
        check_pair(pred[k], target[k]);
        DesignMetrics dm;
        dm.name = names[k];
        dm.n = static_cast<int>(pred[k].size());
        dm.pearson = pearson(pred[k], target[k]);
        dm.spearman = spearman(pred[k], target[k]);
        dm.kendall = kendall(pred[k], target[k]);
        report.per_design.push_back(std::move(dm));
        all_pred.insert(all_pred.end(), pred[k].begin(), pred[k].end());
        all_target.insert(all_target.end(), target[k].begin(), target[k].end());
    }
    report.pooled.name = "pooled";
    report.pooled.n = static_cast<int>(all_pred.size());
    report.pooled.pearson = pearson(all_pred, all_target);
    report.pooled.spearman = spearman(all_pred, all_target);
    report.pooled.kendall = kendall(all_pred, all_target);
    return report;
}

std::string report_to_json(const EvalReport& r) {
    using json = nlohmann::ordered_json;
    const auto row = [](const DesignMetrics& m) {
        json j;
        j["name"] = m.name;
        j["n"] = m.n;
        j["pearson"] = m.pearson;   // NaN serializes as null
        j["spearman"] = m.spearman;
        j["kendall"] = m.kendall;
        return j;
    };
    json j;
    j["pearson"] = r.pooled.pearson;
    j["spearman"] = r.pooled.spearman;
    j["kendall"] = r.pooled.kendall;
    j["n"] = r.pooled.n;
    json pd = json::array();
    for (const DesignMetrics& m : r.per_design) pd.push_back(row(m));
    j["per_design"] = std::move(pd);
    return j.dump(2) + "\n";
}

std::string report_table(const EvalReport& r, bool per_design_rows) {
    char line[160];
    std::string out;
    std::snprintf(line, sizeof line, "%-20s %8s %9s %9s %9s\n", "design", "n", "pearson",
                  "spearman", "kendall");
    out += line;
    const auto emit = [&](const DesignMetrics& m) {
        std::snprintf(line, sizeof line, "%-20s %8d %9.4f %9.4f %9.4f\n", m.name.c_str(), m.n,
                      m.pearson, m.spearman, m.kendall);
        out += line;
    };
    emit(r.pooled);
    if (per_design_rows)
        for (const DesignMetrics& m : r.per_design) emit(m);
    return out;
}

} // namespace congestnet
