#ifndef FEDCACHE_METRICS_HPP
#define FEDCACHE_METRICS_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fedcache {

/// Evaluation after one training round. Byte counts are cumulative and
/// include the one-shot initialization traffic.
struct RoundRecord {
    int round = 0;
    std::vector<double> ua;  ///< per-client test accuracy
    double avg_ua = 0.0;
    std::uint64_t bytes_up = 0;
    std::uint64_t bytes_down = 0;

    std::uint64_t bytes_total() const { return bytes_up + bytes_down; }
};

struct MetricsReport {
    std::string algorithm;
    std::vector<RoundRecord> rounds;
    std::uint64_t init_bytes = 0;
    double maua = 0.0;
    /// acc@ target -> cumulative bytes, or nothing when never reached.
    std::map<double, std::optional<std::uint64_t>> acc_at;
};

/// Maximum over rounds of the across-client mean UA. Throws on an empty report.
double maua(const MetricsReport& report);

/// Cumulative up+down bytes at the first round (in round order) whose average
/// UA reaches `target`.
std::optional<std::uint64_t> comm_to_reach(const MetricsReport& report, double target);

/// base / value. Nothing if either side is unreached or value is not positive.
std::optional<double> speedup(std::optional<double> base_bytes, std::optional<double> this_bytes);

double round_to(double value, int decimals);

/// Fills maua and acc_at for the given targets.
void finalize(MetricsReport& report, const std::vector<double>& acc_targets);

/// `round,avg_ua,maua,bytes_up,bytes_down` rows, then a `# summary` line.
/// The maua column is the running maximum.
std::string to_csv(const MetricsReport& report);
MetricsReport parse_csv(const std::string& text);

struct ComparisonRow {
    std::string method;
    double maua = 0.0;
    std::optional<double> comm_bytes;
    std::optional<double> speedup;
};

/// One row per report: MAUA, bytes to reach `target`, and the speed-up
/// relative to the arm with the highest communication among those that
/// reached it.
std::vector<ComparisonRow> compare(const std::vector<MetricsReport>& reports, double target);

/// Plain-text table: Method | MAUA (%) | Comm. (MB) | Speed-up.
std::string comparison_table(const std::vector<ComparisonRow>& rows);

}  // namespace fedcache

#endif
