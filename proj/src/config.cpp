#include "fedcache/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fedcache {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

[[noreturn]] void bad(std::string_view key, std::string_view value, const char* expected) {
    throw std::invalid_argument("config key '" + std::string(key) + "': expected " + expected + ", got '" +
                                std::string(value) + "'");
}

template <typename T>
T number(std::string_view key, std::string_view value) {
    T out{};
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size() || value.empty()) bad(key, value, "a number");
    return out;
}

bool boolean(std::string_view key, std::string_view value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    bad(key, value, "a boolean");
}

std::string format(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string format(bool v) { return v ? "true" : "false"; }

template <typename T>
std::string format(T v)
    requires std::is_integral_v<T>
{
    return std::to_string(v);
}

}  // namespace

std::string_view to_string(Algorithm a) {
    switch (a) {
        case Algorithm::fedcache: return "fedcache";
        case Algorithm::fd: return "fd";
        case Algorithm::standalone: return "standalone";
    }
    return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
    if (name == "fedcache") return Algorithm::fedcache;
    if (name == "fd") return Algorithm::fd;
    if (name == "standalone") return Algorithm::standalone;
    throw std::invalid_argument("unknown algorithm '" + std::string(name) + "' (fedcache | fd | standalone)");
}

void ExperimentConfig::set(std::string_view key, std::string_view raw) {
    const auto value = trim(raw);
    if (key == "algorithm") algorithm = parse_algorithm(value);
    else if (key == "data") {
        if (value != "synth" && value != "idx") bad(key, value, "synth or idx");
        data = value;
    }
    else if (key == "classes") classes = number<int>(key, value);
    else if (key == "per_class") per_class = number<int>(key, value);
    else if (key == "dim") dim = number<int>(key, value);
    else if (key == "class_sep") class_sep = number<double>(key, value);
    else if (key == "idx_images") idx_images = value;
    else if (key == "idx_labels") idx_labels = value;
    else if (key == "clients" || key == "K") clients = number<int>(key, value);
    else if (key == "alpha") alpha = number<double>(key, value);
    else if (key == "test_fraction") test_fraction = number<double>(key, value);
    else if (key == "local_fraction") local_fraction = number<double>(key, value);
    else if (key == "heterogeneous") heterogeneous = boolean(key, value);
    else if (key == "width_scale") width_scale = number<int>(key, value);
    else if (key == "rounds") rounds = number<int>(key, value);
    else if (key == "batch_size") batch_size = number<int>(key, value);
    else if (key == "lr") lr = number<double>(key, value);
    else if (key == "beta") beta = number<double>(key, value);
    else if (key == "temperature") temperature = number<double>(key, value);
    else if (key == "fd_gamma") fd_gamma = number<double>(key, value);
    else if (key == "shuffle") shuffle = boolean(key, value);
    else if (key == "R" || key == "related") related = number<std::size_t>(key, value);
    else if (key == "hash_dim") hash_dim = number<int>(key, value);
    else if (key == "hnsw_m") hnsw_m = number<int>(key, value);
    else if (key == "ef_construction") ef_construction = number<int>(key, value);
    else if (key == "ef_search") ef_search = number<int>(key, value);
    else if (key == "index") {
        if (value == "hnsw") index = IndexBackend::hnsw;
        else if (value == "exact") index = IndexBackend::exact;
        else bad(key, value, "hnsw or exact");
    }
    else if (key == "hash_file") hash_file = value;
    else if (key == "exclude_same_client") exclude_same_client = boolean(key, value);
    else if (key == "skip_cold_teachers") skip_cold_teachers = boolean(key, value);
    else if (key == "schedule") {
        if (value == "sync") schedule = ScheduleMode::sync;
        else if (value == "async") schedule = ScheduleMode::async;
        else bad(key, value, "sync or async");
    }
    else if (key == "async_seed") async_seed = number<std::uint64_t>(key, value);
    else if (key == "seed") seed = number<std::uint64_t>(key, value);
    else if (key == "acc_targets") {
        acc_targets.clear();
        std::string_view rest = value;
        while (!rest.empty()) {
            const auto comma = rest.find(',');
            acc_targets.push_back(number<double>(key, trim(rest.substr(0, comma))));
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
        }
    }
    else throw std::invalid_argument("unknown config key '" + std::string(key) + "'");
}

void ExperimentConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(std::string("invalid config: ") + what);
    };
    require(classes >= 2, "classes must be at least 2");
    require(per_class >= 1, "per_class must be positive");
    require(dim >= 1, "dim must be positive");
    require(class_sep >= 0.0, "class_sep must be non-negative");
    require(data == "synth" || (!idx_images.empty() && !idx_labels.empty()), "idx data needs idx_images and idx_labels");
    require(clients >= 1, "clients must be positive");
    require(alpha > 0.0, "alpha must be positive");
    require(test_fraction > 0.0 && test_fraction < 1.0, "test_fraction must lie in (0, 1)");
    require(local_fraction >= 0.0 && local_fraction <= 1.0, "local_fraction must lie in [0, 1]");
    require(width_scale >= 1, "width_scale must be positive");
    require(rounds >= 1, "rounds must be positive");
    require(batch_size >= 1, "batch_size must be positive");
    require(lr > 0.0, "lr must be positive");
    require(beta >= 0.0, "beta must be non-negative");
    require(temperature > 0.0, "temperature must be positive");
    require(fd_gamma >= 0.0, "fd_gamma must be non-negative");
    require(related >= 1, "R must be positive");
    require(hash_dim >= 1, "hash_dim must be positive");
    require(hnsw_m >= 2, "hnsw_m must be at least 2");
    require(ef_construction >= 1 && ef_search >= 1, "ef values must be positive");
    require(algorithm != Algorithm::fd || clients >= 2, "fd needs at least two clients");
    for (double t : acc_targets) require(t > 0.0 && t < 1.0, "acc_targets must lie in (0, 1)");
}

std::map<std::string, std::string> ExperimentConfig::to_kv() const {
    std::map<std::string, std::string> kv;
    kv["algorithm"] = to_string(algorithm);
    kv["data"] = data;
    kv["classes"] = format(classes);
    kv["per_class"] = format(per_class);
    kv["dim"] = format(dim);
    kv["class_sep"] = format(class_sep);
    kv["idx_images"] = idx_images;
    kv["idx_labels"] = idx_labels;
    kv["clients"] = format(clients);
    kv["alpha"] = format(alpha);
    kv["test_fraction"] = format(test_fraction);
    kv["local_fraction"] = format(local_fraction);
    kv["heterogeneous"] = format(heterogeneous);
    kv["width_scale"] = format(width_scale);
    kv["rounds"] = format(rounds);
    kv["batch_size"] = format(batch_size);
    kv["lr"] = format(lr);
    kv["beta"] = format(beta);
    kv["temperature"] = format(temperature);
    kv["fd_gamma"] = format(fd_gamma);
    kv["shuffle"] = format(shuffle);
    kv["R"] = format(related);
    kv["hash_dim"] = format(hash_dim);
    kv["hnsw_m"] = format(hnsw_m);
    kv["ef_construction"] = format(ef_construction);
    kv["ef_search"] = format(ef_search);
    kv["index"] = index == IndexBackend::hnsw ? "hnsw" : "exact";
    kv["hash_file"] = hash_file;
    kv["exclude_same_client"] = format(exclude_same_client);
    kv["skip_cold_teachers"] = format(skip_cold_teachers);
    kv["schedule"] = schedule == ScheduleMode::sync ? "sync" : "async";
    kv["async_seed"] = format(async_seed);
    kv["seed"] = format(seed);
    std::string targets;
    for (std::size_t i = 0; i < acc_targets.size(); ++i) targets += (i ? "," : "") + format(acc_targets[i]);
    kv["acc_targets"] = targets;
    return kv;
}

std::string ExperimentConfig::serialize() const {
    std::ostringstream os;
    for (const auto& [k, v] : to_kv()) os << k << " = " << v << '\n';
    return os.str();
}

RelationOptions ExperimentConfig::relation_options() const {
    RelationOptions opts;
    opts.related = related;
    opts.hnsw.max_degree = hnsw_m;
    opts.hnsw.ef_construction = ef_construction;
    opts.hnsw.ef_search = ef_search;
    opts.hnsw.seed = derive_seed(seed, 3);
    opts.backend = index;
    opts.query.exclude_same_client = exclude_same_client;
    return opts;
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig base) {
    ExperimentConfig config = std::move(base);
    std::size_t lineno = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        config.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

std::string config_digest(const ExperimentConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : config.serialize()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace fedcache
