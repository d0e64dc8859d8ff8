#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "meshfl/dataset.hpp"
#include "meshfl/nn.hpp"

namespace meshfl::config {

/// Configuration problem (bad syntax, unknown key, invalid value). The CLI
/// maps this to exit code 2; everything else is a runtime error (exit 3).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Minimal TOML-style document: `[section]` headers, `key = value` pairs,
/// `#` comments. Values: integers, floats, booleans, double-quoted strings,
/// and flat arrays of numbers. Every key lookup is tracked so unknown keys
/// can be rejected after the schema has been read.
class ConfigDoc {
public:
    static ConfigDoc parse_file(const std::filesystem::path& path);
    static ConfigDoc parse_string(const std::string& text, const std::string& origin = "<inline>");

    std::int64_t get_int(const std::string& section, const std::string& key, std::int64_t fallback);
    double get_double(const std::string& section, const std::string& key, double fallback);
    bool get_bool(const std::string& section, const std::string& key, bool fallback);
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback);
    std::vector<double> get_number_array(const std::string& section, const std::string& key,
                                         const std::vector<double>& fallback);

    bool has_section(const std::string& section) const;
    std::vector<std::string> section_names() const;

    /// Throws ConfigError naming the first key never consumed by a getter.
    void reject_unknown_keys() const;

private:
    struct Entry {
        std::string raw;
        int line = 0;
        mutable bool consumed = false;
    };
    std::string origin_;
    std::map<std::string, std::map<std::string, Entry>> sections_;

    const Entry* find(const std::string& section, const std::string& key) const;
    [[noreturn]] void bad_value(const std::string& section, const std::string& key,
                                const Entry& entry, const std::string& expected) const;
};

/// Fully validated run configuration; every module precondition the commands
/// would later hit is checked here first.
struct Config {
    // [scenario]
    std::uint64_t seed = 0;
    std::string selector = "baseline"; // baseline | predictive
    std::string model_file;            // required for predictive simulate
    int ogm_ttl = 16;
    double ogm_interval_s = 1.0;
    double cost_tick_s = 1.0;

    // [links]
    double latency_s = 0.01;
    double drop_prob = 0.0;

    // [trace] (+ [route0..routeN-1] when kind != "fig3")
    std::string trace_kind = "fig3"; // fig3 | custom
    std::size_t trace_length = 50;
    std::vector<dataset::TraceSpec> route_specs; // custom only

    // [model]
    nn::LstmConfig lstm;

    // [training]
    int epochs = 10;
    std::size_t batch_size = 5;
    double learning_rate = 0.01;
    int workers = 2;
    double convergence_tol = 0.0;
    bool parallel_clients = false;

    // [fl]
    double round_period_s = 1.0;
    bool via_network = true;

    std::uint64_t config_hash = 0; // FNV-1a of the raw config bytes

    static Config load(const std::filesystem::path& path,
                       std::optional<std::uint64_t> seed_override = {});
    static Config from_string(const std::string& text,
                              std::optional<std::uint64_t> seed_override = {});

    void validate() const;

    /// The configured trace (canonical two-route set for "fig3", generated
    /// specs otherwise). Noise, if any, draws from the trace seed stream.
    LinkCostTrace build_trace() const;
};

/// Reproducibility record written at the end of every command:
/// tool version, seed, config hash, and a fingerprint per output file.
struct RunManifest {
    std::string version;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    std::vector<std::pair<std::string, std::string>> outputs; // (name, fnv64 hex)

    /// Serializes to JSON and renames into place so readers never observe a
    /// partial file.
    void write_atomic(const std::filesystem::path& path) const;
};

extern const char* const kToolVersion;

} // namespace meshfl::config
