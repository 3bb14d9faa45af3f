#include "commands.hpp"

#include "fedcache/config.hpp"
#include "fedcache/data.hpp"
#include "fedcache/errors.hpp"
#include "fedcache/federation.hpp"
#include "fedcache/metrics.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fedcache::cli {

namespace {

namespace fs = std::filesystem;

// Config/usage problems map to exit code 2.
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

ExperimentConfig base_config() {
    ExperimentConfig cfg;
    if (const char* env = std::getenv("FEDCACHE_SEED"); env && *env) cfg.set("seed", env);
    return cfg;
}

void apply_assignments(ExperimentConfig& cfg, const std::vector<std::string>& assignments) {
    for (const auto& a : assignments) {
        const auto eq = a.find('=');
        if (eq == std::string::npos) throw UsageError("expected key=value, got '" + a + "'");
        cfg.set(a.substr(0, eq), a.substr(eq + 1));
    }
}

std::string synth_key(const std::string& key) {
    if (key == "C") return "classes";
    if (key == "per-class") return "per_class";
    if (key == "class-sep") return "class_sep";
    return key;
}

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << text;
}

std::string read_text(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw UsageError("cannot read " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string summary_line(const MetricsReport& report) {
    char buf[160];
    const auto total = report.rounds.empty() ? std::uint64_t{0} : report.rounds.back().bytes_total();
    std::snprintf(buf, sizeof buf, "algorithm=%s maua=%.6f total_bytes=%llu", report.algorithm.c_str(), report.maua,
                  static_cast<unsigned long long>(total));
    return buf;
}

// ---- partition ----

struct PartitionArgs {
    std::vector<std::string> synth;
    std::string idx_images, idx_labels;
    int clients = 0;
    double alpha = 0.0;
    std::optional<std::uint64_t> seed;
    double test_fraction = 0.2;
    std::string out = "shards";
};

int do_partition(const PartitionArgs& args, std::ostream& out) {
    ExperimentConfig cfg = base_config();
    const bool synth = !args.synth.empty();
    const bool idx = !args.idx_images.empty() || !args.idx_labels.empty();
    if (synth == idx) throw UsageError("give exactly one of --synth or --idx-images/--idx-labels");
    if (synth) {
        for (const auto& kv : args.synth) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw UsageError("--synth expects key=value, got '" + kv + "'");
            cfg.set(synth_key(kv.substr(0, eq)), kv.substr(eq + 1));
        }
    } else {
        cfg.data = "idx";
        cfg.idx_images = args.idx_images;
        cfg.idx_labels = args.idx_labels;
    }
    cfg.clients = args.clients;
    cfg.alpha = args.alpha;
    cfg.test_fraction = args.test_fraction;
    if (args.seed) cfg.seed = *args.seed;
    cfg.validate();
    if (cfg.data == "idx" && (!fs::exists(cfg.idx_images) || !fs::exists(cfg.idx_labels)))
        throw UsageError("IDX file not found");

    const Setup setup = prepare(cfg);
    fs::create_directories(args.out);
    std::size_t assigned = 0;
    for (const auto& shard : setup.shards) {
        char name[32];
        std::snprintf(name, sizeof name, "client_%03d.txt", shard.client_id);
        write_shard_manifest(fs::path(args.out) / name, shard);
        assigned += shard.train_index.size() + shard.test_index.size();
    }
    std::ostringstream record;
    char tv[32];
    std::snprintf(tv, sizeof tv, "%.6f", mean_label_tv_distance(setup.data, setup.partition));
    record << "seed = " << cfg.seed << "\nclients = " << cfg.clients << "\nalpha = " << cfg.to_kv()["alpha"]
           << "\nsamples = " << setup.data.size() << "\nassigned = " << assigned << "\nlabel_tv = " << tv << '\n';
    write_text(fs::path(args.out) / "partition.txt", record.str());
    if (assigned != static_cast<std::size_t>(setup.data.size()))
        throw std::runtime_error("partition lost samples: " + std::to_string(assigned) + " of " +
                                 std::to_string(setup.data.size()));
    out << setup.shards.size() << " manifests written to " << args.out << " (" << assigned << " samples, label_tv "
        << tv << ")\n";
    return kExitOk;
}

// ---- run ----

struct RunArgs {
    std::string config;
    std::vector<std::string> set;
    std::optional<std::string> algorithm;
    std::optional<std::size_t> related;
    std::optional<double> beta, alpha;
    std::optional<int> rounds, clients;
    std::optional<std::uint64_t> seed;
    std::string out;
};

ExperimentConfig run_config(const RunArgs& args) {
    ExperimentConfig cfg = base_config();
    if (!args.config.empty()) {
        if (!fs::exists(args.config)) throw UsageError("config file not found: " + args.config);
        cfg = load_config(args.config, cfg);
    }
    if (args.algorithm) cfg.algorithm = parse_algorithm(*args.algorithm);
    if (args.related) cfg.related = *args.related;
    if (args.beta) cfg.beta = *args.beta;
    if (args.alpha) cfg.alpha = *args.alpha;
    if (args.rounds) cfg.rounds = *args.rounds;
    if (args.clients) cfg.clients = *args.clients;
    if (args.seed) cfg.seed = *args.seed;
    apply_assignments(cfg, args.set);
    cfg.validate();
    return cfg;
}

int do_run(const RunArgs& args, std::ostream& out) {
    const ExperimentConfig cfg = run_config(args);
    const std::string started = utc_now();
    const MetricsReport report = run_experiment(cfg);
    const std::string csv = to_csv(report);
    if (args.out.empty()) {
        out << csv;
        return kExitOk;
    }
    fs::create_directories(args.out);
    write_text(fs::path(args.out) / "metrics.csv", csv);
    std::ostringstream manifest;
    manifest << "run_id = " << config_digest(cfg) << "\nconfig_path = " << args.config << "\noutput_dir = " << args.out
             << "\nstarted = " << started << "\nfinished = " << utc_now() << "\n\n"
             << cfg.serialize();
    write_text(fs::path(args.out) / "manifest.txt", manifest.str());
    out << summary_line(report) << '\n';
    return kExitOk;
}

// ---- sweep ----

struct SweepArgs {
    std::string config;
    std::vector<std::string> set;
    std::string axis;
    std::vector<std::string> values;
    std::vector<std::uint64_t> seeds;
    double target = 0.6;
    std::string out;
};

struct SweepRow {
    std::string value;
    double maua = 0.0;
    std::optional<double> comm;
    std::optional<double> speedup;
    double label_tv = 0.0;
};

std::string sweep_table(const std::string& axis, std::vector<SweepRow> rows) {
    std::optional<double> base;
    for (const auto& r : rows)
        if (r.comm && (!base || *r.comm > *base)) base = r.comm;
    std::ostringstream os;
    char buf[200];
    std::snprintf(buf, sizeof buf, "%-16s | %9s | %12s | %9s | %8s\n", axis.c_str(), "MAUA (%)", "Comm. (MB)",
                  "Speed-up", "Label TV");
    os << buf << std::string(66, '-') << '\n';
    for (auto& r : rows) {
        r.speedup = speedup(base, r.comm);
        char comm[32] = "-", up[32] = "-";
        if (r.comm) std::snprintf(comm, sizeof comm, "%.3f", *r.comm / 1e6);
        if (r.speedup) std::snprintf(up, sizeof up, "x%.1f", round_to(*r.speedup, 1));
        std::snprintf(buf, sizeof buf, "%-16s | %9.2f | %12s | %9s | %8.4f\n", r.value.c_str(), 100.0 * r.maua, comm, up,
                      r.label_tv);
        os << buf;
    }
    return os.str();
}

int do_sweep(SweepArgs args, std::ostream& out, std::ostream& err) {
    args.values.erase(std::remove_if(args.values.begin(), args.values.end(), [](const std::string& v) {
                          return v.find_first_not_of(" \t") == std::string::npos;
                      }),
                      args.values.end());
    if (args.values.empty()) throw UsageError("--values needs at least one value");

    RunArgs base_args;
    base_args.config = args.config;
    base_args.set = args.set;
    const ExperimentConfig base = run_config(base_args);
    if (args.seeds.empty()) args.seeds.push_back(base.seed);

    // Validate every arm before running any.
    std::vector<std::pair<std::string, ExperimentConfig>> arms;
    for (const auto& v : args.values) {
        ExperimentConfig cfg = base;
        cfg.set(args.axis, v);
        cfg.validate();
        arms.emplace_back(v, cfg);
    }
    auto numeric = [](const std::string& s) -> std::optional<double> {
        double d{};
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
        if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
        return d;
    };
    std::stable_sort(arms.begin(), arms.end(), [&](const auto& a, const auto& b) {
        const auto x = numeric(a.first), y = numeric(b.first);
        return x && y ? *x < *y : false;
    });

    std::vector<SweepRow> rows;
    if (!args.out.empty()) fs::create_directories(args.out);
    for (const auto& [value, arm] : arms) {
        try {
            SweepRow row;
            row.value = value;
            double comm_sum = 0.0;
            bool reached = true;
            for (std::uint64_t seed : args.seeds) {
                ExperimentConfig cfg = arm;
                cfg.seed = seed;
                const Setup setup = prepare(cfg);
                row.label_tv += mean_label_tv_distance(setup.data, setup.partition);
                MetricsReport report = run_experiment(cfg);
                row.maua += report.maua;
                const auto bytes = comm_to_reach(report, args.target);
                if (bytes) comm_sum += static_cast<double>(*bytes);
                else reached = false;
                if (!args.out.empty())
                    write_text(fs::path(args.out) / (args.axis + "_" + value + "_seed" + std::to_string(seed) + ".csv"),
                               to_csv(report));
            }
            const auto n = static_cast<double>(args.seeds.size());
            row.maua /= n;
            row.label_tv /= n;
            if (reached) row.comm = comm_sum / n;
            rows.push_back(row);
        } catch (...) {
            out << sweep_table(args.axis, rows);
            err << "sweep: arm " << args.axis << "=" << value << " failed\n";
            throw;
        }
    }
    const std::string table = sweep_table(args.axis, rows);
    out << table;
    if (!args.out.empty()) write_text(fs::path(args.out) / "table.txt", table);
    return kExitOk;
}

// ---- report ----

int do_report(const std::vector<std::string>& files, double target, std::ostream& out) {
    std::vector<MetricsReport> reports;
    for (const auto& f : files) {
        auto report = parse_csv(read_text(f));
        if (report.algorithm.empty()) report.algorithm = fs::path(f).stem().string();
        reports.push_back(std::move(report));
    }
    out << comparison_table(compare(reports, target));
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Federated logit-cache simulator", "fedcache"};
    app.require_subcommand(1);

    PartitionArgs part;
    auto* partition = app.add_subcommand("partition", "Split a dataset into client shard manifests");
    partition->add_option("--synth", part.synth, "Synthetic data: C=.. per-class=.. dim=.. class-sep=..")->expected(1, -1);
    partition->add_option("--idx-images", part.idx_images, "IDX image file");
    partition->add_option("--idx-labels", part.idx_labels, "IDX label file");
    partition->add_option("--K", part.clients, "Number of clients")->required();
    partition->add_option("--alpha", part.alpha, "Dirichlet concentration")->required();
    partition->add_option("--seed", part.seed, "Seed (default FEDCACHE_SEED or 1)");
    partition->add_option("--test-fraction", part.test_fraction, "Local test fraction");
    partition->add_option("--out", part.out, "Output directory");

    RunArgs run;
    auto* runcmd = app.add_subcommand("run", "Run one experiment");
    runcmd->add_option("--config", run.config, "key = value config file");
    runcmd->add_option("--set", run.set, "Override key=value")->expected(1, -1);
    runcmd->add_option("--algorithm", run.algorithm, "fedcache | fd | standalone");
    runcmd->add_option("--R", run.related, "Related samples per query");
    runcmd->add_option("--beta", run.beta, "Distillation weight");
    runcmd->add_option("--alpha", run.alpha, "Dirichlet concentration");
    runcmd->add_option("--rounds", run.rounds, "Training rounds");
    runcmd->add_option("--K", run.clients, "Number of clients");
    runcmd->add_option("--seed", run.seed, "Seed");
    runcmd->add_option("--out", run.out, "Output directory (metrics.csv, manifest.txt); stdout when absent");

    SweepArgs sweep;
    auto* sweepcmd = app.add_subcommand("sweep", "Run one experiment per value of a config key");
    sweepcmd->add_option("--config", sweep.config, "Base config file");
    sweepcmd->add_option("--set", sweep.set, "Override key=value")->expected(1, -1);
    sweepcmd->add_option("--axis", sweep.axis, "Config key to sweep (R, alpha, local_fraction, ...)")->required();
    sweepcmd->add_option("--values", sweep.values, "Values, space or comma separated")
        ->required()
        ->expected(1, -1)
        ->delimiter(',');
    sweepcmd->add_option("--seeds", sweep.seeds, "Seeds shared by every arm")->expected(1, -1)->delimiter(',');
    sweepcmd->add_option("--target", sweep.target, "Accuracy target for the Comm. column");
    sweepcmd->add_option("--out", sweep.out, "Directory for per-arm CSVs and the table");

    std::vector<std::string> files;
    double target = 0.6;
    auto* report = app.add_subcommand("report", "Comparison table from metrics CSV files");
    report->add_option("files", files, "metrics.csv files")->required()->expected(1, -1);
    report->add_option("--target", target, "Accuracy target for the Comm. column");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*partition) return do_partition(part, out);
        if (*runcmd) return do_run(run, out);
        if (*sweepcmd) return do_sweep(sweep, out, err);
        if (*report) return do_report(files, target, out);
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace fedcache::cli
