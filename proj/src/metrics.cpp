#include "fedcache/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace fedcache {

namespace {

std::vector<const RoundRecord*> by_round(const MetricsReport& report) {
    std::vector<const RoundRecord*> order;
    for (const auto& r : report.rounds) order.push_back(&r);
    std::stable_sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->round < b->round; });
    return order;
}

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

}  // namespace

double maua(const MetricsReport& report) {
    if (report.rounds.empty()) throw std::invalid_argument("maua: report has no rounds");
    double best = report.rounds.front().avg_ua;
    for (const auto& r : report.rounds) best = std::max(best, r.avg_ua);
    return best;
}

std::optional<std::uint64_t> comm_to_reach(const MetricsReport& report, double target) {
    for (const auto* r : by_round(report))
        if (r->avg_ua >= target) return r->bytes_total();
    return std::nullopt;
}

std::optional<double> speedup(std::optional<double> base_bytes, std::optional<double> this_bytes) {
    if (!base_bytes || !this_bytes || !(*this_bytes > 0.0)) return std::nullopt;
    return *base_bytes / *this_bytes;
}

double round_to(double value, int decimals) {
    const double scale = std::pow(10.0, decimals);
    return std::round(value * scale) / scale;
}

void finalize(MetricsReport& report, const std::vector<double>& acc_targets) {
    report.maua = maua(report);
    report.acc_at.clear();
    for (double t : acc_targets) report.acc_at[t] = comm_to_reach(report, t);
}

std::string to_csv(const MetricsReport& report) {
    std::ostringstream os;
    os << "round,avg_ua,maua,bytes_up,bytes_down\n";
    double running = 0.0;
    bool first = true;
    for (const auto* r : by_round(report)) {
        running = first ? r->avg_ua : std::max(running, r->avg_ua);
        first = false;
        os << r->round << ',' << fixed(r->avg_ua, 6) << ',' << fixed(running, 6) << ',' << r->bytes_up << ','
           << r->bytes_down << '\n';
    }
    os << "# summary algorithm=" << report.algorithm << " maua=" << fixed(report.maua, 6)
       << " init_bytes=" << report.init_bytes;
    const std::uint64_t total = report.rounds.empty() ? report.init_bytes : by_round(report).back()->bytes_total();
    os << " total_bytes=" << total;
    for (const auto& [target, bytes] : report.acc_at) {
        os << " acc@" << fixed(target, 4) << '=';
        if (bytes)
            os << *bytes;
        else
            os << "unreached";
    }
    os << '\n';
    return os.str();
}

MetricsReport parse_csv(const std::string& text) {
    MetricsReport report;
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (lineno == 1) {
            if (line != "round,avg_ua,maua,bytes_up,bytes_down")
                throw std::invalid_argument("metrics CSV: unexpected header");
            continue;
        }
        if (line.rfind("# summary", 0) == 0) {
            std::istringstream fs(line.substr(9));
            for (std::string field; fs >> field;) {
                const auto eq = field.find('=');
                if (eq == std::string::npos) continue;
                const std::string key = field.substr(0, eq), value = field.substr(eq + 1);
                if (key == "algorithm") report.algorithm = value;
                if (key == "init_bytes") report.init_bytes = std::stoull(value);
                if (key.rfind("acc@", 0) == 0) {
                    const double target = std::stod(key.substr(4));
                    report.acc_at[target] =
                        value == "unreached" ? std::nullopt : std::optional<std::uint64_t>(std::stoull(value));
                }
            }
            continue;
        }
        RoundRecord r;
        char comma;
        double running;
        std::istringstream fs(line);
        if (!(fs >> r.round >> comma >> r.avg_ua >> comma >> running >> comma >> r.bytes_up >> comma >> r.bytes_down))
            throw std::invalid_argument("metrics CSV: malformed row at line " + std::to_string(lineno));
        report.rounds.push_back(std::move(r));
    }
    if (!report.rounds.empty()) report.maua = maua(report);
    return report;
}

std::vector<ComparisonRow> compare(const std::vector<MetricsReport>& reports, double target) {
    std::vector<ComparisonRow> rows;
    std::optional<double> base;
    for (const auto& r : reports) {
        ComparisonRow row;
        row.method = r.algorithm;
        row.maua = r.rounds.empty() ? 0.0 : maua(r);
        if (const auto bytes = comm_to_reach(r, target)) {
            row.comm_bytes = static_cast<double>(*bytes);
            base = base ? std::max(*base, *row.comm_bytes) : *row.comm_bytes;
        }
        rows.push_back(std::move(row));
    }
    for (auto& row : rows) row.speedup = speedup(base, row.comm_bytes);
    return rows;
}

std::string comparison_table(const std::vector<ComparisonRow>& rows) {
    std::ostringstream os;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-24s | %9s | %12s | %9s\n", "Method", "MAUA (%)", "Comm. (MB)", "Speed-up");
    os << buf << std::string(64, '-') << '\n';
    for (const auto& row : rows) {
        const std::string comm = row.comm_bytes ? fixed(*row.comm_bytes / 1e6, 3) : "-";
        const std::string up = row.speedup ? "x" + fixed(round_to(*row.speedup, 1), 1) : "-";
        std::snprintf(buf, sizeof buf, "%-24s | %9s | %12s | %9s\n", row.method.c_str(),
                      fixed(100.0 * row.maua, 2).c_str(), comm.c_str(), up.c_str());
        os << buf;
    }
    return os.str();
}

}  // namespace fedcache
