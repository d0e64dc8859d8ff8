#include "meshfl/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace meshfl::io {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
    throw std::runtime_error(path.string() + ": " + what);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    fields.push_back(field);
    return fields;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                               const std::string& expected_header) {
    std::ifstream in(path);
    if (!in) fail(path, "cannot open");
    std::string line;
    if (!std::getline(in, line)) fail(path, "empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != expected_header) fail(path, "unexpected header '" + line + "'");
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        rows.push_back(split_csv_line(line));
    }
    return rows;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");
    return out;
}

long long parse_int(const std::string& text) {
    long long value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw std::runtime_error("bad integer '" + text + "'");
    return value;
}

} // namespace

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buffer[64];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
    if (ec != std::errc{}) throw std::logic_error("to_chars failed");
    return std::string(buffer, ptr);
}

double parse_double(std::string_view text) {
    if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (text == "inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw std::runtime_error("bad number '" + std::string(text) + "'");
    return value;
}

void write_trace_csv(const std::filesystem::path& path, const LinkCostTrace& trace) {
    auto out = open_out(path);
    out << "t";
    for (std::size_t r = 0; r < trace.num_routes; ++r) out << ",route" << r;
    out << "\n";
    for (std::size_t t = 0; t < trace.steps(); ++t) {
        out << t;
        for (std::size_t r = 0; r < trace.num_routes; ++r)
            out << "," << format_double(trace.at(t, static_cast<RouteId>(r)));
        out << "\n";
    }
}

LinkCostTrace read_trace_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(path, "cannot open");
    std::string header;
    if (!std::getline(in, header)) fail(path, "empty file");
    if (!header.empty() && header.back() == '\r') header.pop_back();
    const auto names = split_csv_line(header);
    if (names.size() < 2 || names[0] != "t") fail(path, "unexpected header '" + header + "'");
    for (std::size_t r = 0; r + 1 < names.size(); ++r)
        if (names[r + 1] != "route" + std::to_string(r)) fail(path, "unexpected header '" + header + "'");

    LinkCostTrace trace;
    trace.num_routes = names.size() - 1;
    std::string line;
    std::size_t expected_t = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != names.size()) fail(path, "wrong column count");
        if (static_cast<std::size_t>(parse_int(fields[0])) != expected_t)
            fail(path, "non-consecutive time index");
        for (std::size_t r = 0; r < trace.num_routes; ++r)
            trace.costs.push_back(parse_double(fields[r + 1]));
        ++expected_t;
    }
    if (trace.steps() == 0) fail(path, "no rows");
    return trace;
}

void write_dataset_csv(const std::filesystem::path& path, const dataset::Dataset& data) {
    auto out = open_out(path);
    const std::size_t width = data.seq_len * data.num_routes;
    for (std::size_t i = 0; i < width; ++i) out << "x" << i << ",";
    out << "label\n";
    for (const auto& sample : data.samples) {
        for (double v : sample.window) out << format_double(v) << ",";
        out << sample.label << "\n";
    }
}

dataset::Dataset read_dataset_csv(const std::filesystem::path& path, std::size_t seq_len,
                                  std::size_t num_routes) {
    const std::size_t width = seq_len * num_routes;
    std::string header;
    for (std::size_t i = 0; i < width; ++i) header += "x" + std::to_string(i) + ",";
    header += "label";
    const auto rows = read_csv(path, header);

    dataset::Dataset data;
    data.seq_len = seq_len;
    data.num_routes = num_routes;
    for (const auto& fields : rows) {
        if (fields.size() != width + 1) fail(path, "wrong column count");
        nn::WindowedSample sample;
        sample.window.reserve(width);
        for (std::size_t i = 0; i < width; ++i) sample.window.push_back(parse_double(fields[i]));
        const long long label = parse_int(fields[width]);
        if (label != 0 && label != 1) fail(path, "label must be 0 or 1");
        sample.label = static_cast<int>(label);
        data.samples.push_back(std::move(sample));
    }
    if (data.samples.empty()) fail(path, "no rows");
    return data;
}

void write_metrics_csv(const std::filesystem::path& path, const netsim::MetricsLog& log) {
    auto out = open_out(path);
    out << "t,mode,chosen_route,step_cost,cumulative_cost,switches\n";
    for (const auto& tick : log.ticks) {
        out << tick.t << "," << log.mode << "," << tick.chosen_route << ","
            << format_double(tick.step_cost) << "," << format_double(tick.cumulative_cost) << ","
            << tick.switches << "\n";
    }
}

netsim::MetricsLog read_metrics_csv(const std::filesystem::path& path) {
    const auto rows = read_csv(path, "t,mode,chosen_route,step_cost,cumulative_cost,switches");
    netsim::MetricsLog log;
    for (const auto& fields : rows) {
        if (fields.size() != 6) fail(path, "wrong column count");
        netsim::TickRecord tick;
        tick.t = static_cast<std::size_t>(parse_int(fields[0]));
        log.mode = fields[1];
        tick.chosen_route = static_cast<RouteId>(parse_int(fields[2]));
        tick.step_cost = parse_double(fields[3]);
        tick.cumulative_cost = parse_double(fields[4]);
        tick.switches = static_cast<std::uint64_t>(parse_int(fields[5]));
        log.ticks.push_back(tick);
    }
    if (log.ticks.empty()) fail(path, "no rows");
    return log;
}

void write_rounds_csv(const std::filesystem::path& path,
                      const std::vector<fl::RoundReport>& rounds) {
    auto out = open_out(path);
    out << "round,client_id,local_loss,global_loss,elapsed_ms\n";
    for (const auto& report : rounds) {
        for (const auto& [client, loss] : report.client_losses) {
            out << report.round << "," << client << "," << format_double(loss) << ","
                << format_double(report.global_loss) << "," << format_double(report.elapsed_ms)
                << "\n";
        }
    }
}

std::vector<fl::RoundReport> read_rounds_csv(const std::filesystem::path& path) {
    const auto rows = read_csv(path, "round,client_id,local_loss,global_loss,elapsed_ms");
    std::vector<fl::RoundReport> rounds;
    for (const auto& fields : rows) {
        if (fields.size() != 5) fail(path, "wrong column count");
        const int round = static_cast<int>(parse_int(fields[0]));
        if (rounds.empty() || rounds.back().round != round) {
            fl::RoundReport report;
            report.round = round;
            rounds.push_back(report);
        }
        rounds.back().client_losses.emplace_back(static_cast<NodeId>(parse_int(fields[1])),
                                                 parse_double(fields[2]));
        rounds.back().global_loss = parse_double(fields[3]);
        rounds.back().elapsed_ms = parse_double(fields[4]);
    }
    return rounds;
}

void write_epoch_csv(const std::filesystem::path& path, const std::vector<EpochLoss>& losses) {
    auto out = open_out(path);
    out << "epoch,loss\n";
    for (const auto& entry : losses)
        out << entry.epoch << "," << format_double(entry.loss) << "\n";
}

std::vector<EpochLoss> read_epoch_csv(const std::filesystem::path& path) {
    const auto rows = read_csv(path, "epoch,loss");
    std::vector<EpochLoss> losses;
    for (const auto& fields : rows) {
        if (fields.size() != 2) fail(path, "wrong column count");
        losses.push_back(EpochLoss{static_cast<int>(parse_int(fields[0])), parse_double(fields[1])});
    }
    return losses;
}

void write_evaluation_csv(const std::filesystem::path& path, const Evaluation& evaluation) {
    auto out = open_out(path);
    out << "samples,accuracy,mean_loss\n";
    out << evaluation.samples << "," << format_double(evaluation.accuracy) << ","
        << format_double(evaluation.mean_loss) << "\n";
}

Evaluation read_evaluation_csv(const std::filesystem::path& path) {
    const auto rows = read_csv(path, "samples,accuracy,mean_loss");
    if (rows.size() != 1 || rows[0].size() != 3) fail(path, "expected a single row");
    Evaluation evaluation;
    evaluation.samples = static_cast<std::size_t>(parse_int(rows[0][0]));
    evaluation.accuracy = parse_double(rows[0][1]);
    evaluation.mean_loss = parse_double(rows[0][2]);
    return evaluation;
}

void write_compare_csv(const std::filesystem::path& path, const netsim::CompareSummary& summary) {
    auto out = open_out(path);
    out << "switch_time_delta,cumulative_cost_delta,final_loss_a,final_loss_b\n";
    out << format_double(summary.switch_time_delta) << ","
        << format_double(summary.cumulative_cost_delta) << ","
        << format_double(summary.final_loss_a) << "," << format_double(summary.final_loss_b)
        << "\n";
}

std::vector<double> read_loss_curve(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(path, "cannot open");
    std::string header;
    if (!std::getline(in, header)) fail(path, "empty file");
    if (!header.empty() && header.back() == '\r') header.pop_back();
    in.close();

    std::vector<double> curve;
    if (header == "epoch,loss") {
        for (const auto& entry : read_epoch_csv(path)) curve.push_back(entry.loss);
    } else if (header == "round,client_id,local_loss,global_loss,elapsed_ms") {
        for (const auto& report : read_rounds_csv(path)) curve.push_back(report.global_loss);
    } else {
        fail(path, "unexpected header '" + header + "'");
    }
    if (curve.empty()) fail(path, "no rows");
    return curve;
}

void write_model_file(const std::filesystem::path& path, const fl::ParamMessage& message) {
    write_file_bytes(path, fl::serialize_params(message));
}

fl::ParamMessage read_model_file(const std::filesystem::path& path) {
    return fl::deserialize_params(read_file_bytes(path));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(path, "write failed");
}

std::string file_fingerprint(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    const std::uint64_t h = fnv1a64(bytes);
    char buffer[17];
    std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buffer);
}

} // namespace meshfl::io
