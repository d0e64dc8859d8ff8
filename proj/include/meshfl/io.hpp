#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "meshfl/core.hpp"
#include "meshfl/dataset.hpp"
#include "meshfl/fl.hpp"
#include "meshfl/netsim.hpp"

namespace meshfl::io {

/// Shortest decimal text that round-trips the exact double (std::to_chars),
/// so emitted files are byte-stable across runs and parse back losslessly.
std::string format_double(double value);
double parse_double(std::string_view text);

struct EpochLoss {
    int epoch = 0;
    double loss = 0.0;
};

struct Evaluation {
    std::size_t samples = 0;
    double accuracy = 0.0;
    double mean_loss = 0.0;
};

// Trace CSV: header `t,route0,...,route{R-1}`, one row per step.
void write_trace_csv(const std::filesystem::path& path, const LinkCostTrace& trace);
LinkCostTrace read_trace_csv(const std::filesystem::path& path);

// Dataset CSV: flattened window columns `x0..x{S*R-1}` (row-major:
// time-major, route-minor) plus `label`.
void write_dataset_csv(const std::filesystem::path& path, const dataset::Dataset& data);
dataset::Dataset read_dataset_csv(const std::filesystem::path& path, std::size_t seq_len,
                                  std::size_t num_routes);

// Metrics CSV: `t,mode,chosen_route,step_cost,cumulative_cost,switches`.
void write_metrics_csv(const std::filesystem::path& path, const netsim::MetricsLog& log);
netsim::MetricsLog read_metrics_csv(const std::filesystem::path& path);

// Round CSV: `round,client_id,local_loss,global_loss,elapsed_ms`.
void write_rounds_csv(const std::filesystem::path& path,
                      const std::vector<fl::RoundReport>& rounds);
std::vector<fl::RoundReport> read_rounds_csv(const std::filesystem::path& path);

// Epoch-loss CSV: `epoch,loss`.
void write_epoch_csv(const std::filesystem::path& path, const std::vector<EpochLoss>& losses);
std::vector<EpochLoss> read_epoch_csv(const std::filesystem::path& path);

// Evaluation CSV: `samples,accuracy,mean_loss`, single row.
void write_evaluation_csv(const std::filesystem::path& path, const Evaluation& evaluation);
Evaluation read_evaluation_csv(const std::filesystem::path& path);

// Compare CSV: one-row summary of netsim::compare_runs.
void write_compare_csv(const std::filesystem::path& path, const netsim::CompareSummary& summary);

/// Per-round loss curve extracted from either a round CSV (global_loss,
/// deduplicated by round) or an epoch CSV; distinguished by header.
std::vector<double> read_loss_curve(const std::filesystem::path& path);

// Model files are single FLP1 frames.
void write_model_file(const std::filesystem::path& path, const fl::ParamMessage& message);
fl::ParamMessage read_model_file(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

/// FNV-1a 64 fingerprint of a file's bytes, as 16 hex digits.
std::string file_fingerprint(const std::filesystem::path& path);

} // namespace meshfl::io
