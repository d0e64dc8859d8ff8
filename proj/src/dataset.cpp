#include "meshfl/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace meshfl::dataset {

void TraceSpec::validate() const {
    if (length < 2) throw std::invalid_argument("trace length must be >= 2");
    if (noise_std < 0.0) throw std::invalid_argument("noise_std must be >= 0");
    switch (kind) {
    case Kind::constant:
        if (level <= 0.0) throw std::invalid_argument("constant level must be > 0");
        break;
    case Kind::linear_ramp:
        break;
    case Kind::piecewise:
        if (breakpoints.empty()) throw std::invalid_argument("piecewise spec needs breakpoints");
        if (breakpoints.front().first != 0)
            throw std::invalid_argument("first breakpoint must start at step 0");
        for (std::size_t i = 1; i < breakpoints.size(); ++i)
            if (breakpoints[i].first <= breakpoints[i - 1].first)
                throw std::invalid_argument("breakpoint starts must be strictly increasing");
        break;
    }
}

LinkCostTrace generate_trace(const TraceSpec& spec, SeededRng& rng) {
    spec.validate();
    std::vector<double> column(spec.length);
    for (std::size_t t = 0; t < spec.length; ++t) {
        double value = 0.0;
        switch (spec.kind) {
        case TraceSpec::Kind::constant:
            value = spec.level;
            break;
        case TraceSpec::Kind::linear_ramp:
            value = spec.intercept + spec.slope * static_cast<double>(t);
            break;
        case TraceSpec::Kind::piecewise: {
            value = spec.breakpoints.front().second;
            for (const auto& [start, level] : spec.breakpoints) {
                if (t >= start) value = level;
            }
            break;
        }
        }
        if (spec.noise_std > 0.0) value += rng.normal(0.0, spec.noise_std);
        column[t] = std::max(value, 0.01);
    }
    return trace_from_columns({column});
}

LinkCostTrace make_fig3_dataset() {
    std::vector<double> constant(kFig3Steps, 2.0);
    std::vector<double> ramp(kFig3Steps);
    for (std::size_t t = 0; t < kFig3Steps; ++t)
        ramp[t] = 1.0 + 0.05 * static_cast<double>(t);
    return trace_from_columns({constant, ramp});
}

Dataset make_windows(const LinkCostTrace& trace, std::size_t seq_len) {
    if (seq_len < 1) throw std::invalid_argument("seq_len must be >= 1");
    const std::size_t t_len = trace.steps();
    const std::size_t routes = trace.num_routes;
    if (routes < 1) throw std::invalid_argument("trace has no routes");
    if (t_len < seq_len + 1) throw std::invalid_argument("trace too short");

    Dataset out;
    out.seq_len = seq_len;
    out.num_routes = routes;
    out.samples.reserve(t_len - seq_len);
    for (std::size_t t = seq_len; t < t_len; ++t) {
        WindowedSample sample;
        sample.window.reserve(seq_len * routes);
        for (std::size_t row = t - seq_len; row < t; ++row)
            for (std::size_t r = 0; r < routes; ++r)
                sample.window.push_back(trace.at(row, static_cast<RouteId>(r)));
        RouteId best = 0;
        for (std::size_t r = 1; r < routes; ++r)
            if (trace.at(t, static_cast<RouteId>(r)) < trace.at(t, best))
                best = static_cast<RouteId>(r);
        sample.label = static_cast<int>(best);
        out.samples.push_back(std::move(sample));
    }
    return out;
}

ClientPartition partition_random(std::size_t num_samples, const std::vector<NodeId>& client_ids,
                                 SeededRng& rng) {
    if (client_ids.empty()) throw std::invalid_argument("no clients");
    if (client_ids.size() > num_samples)
        throw std::invalid_argument("more clients than samples");
    {
        std::vector<NodeId> sorted = client_ids;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw std::invalid_argument("duplicate client id");
    }

    std::vector<std::size_t> order(num_samples);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    ClientPartition partition;
    for (NodeId id : client_ids) partition.assignments[id]; // materialize in id order
    for (std::size_t i = 0; i < order.size(); ++i)
        partition.assignments[client_ids[i % client_ids.size()]].push_back(order[i]);
    for (auto& [id, indices] : partition.assignments) std::sort(indices.begin(), indices.end());
    return partition;
}

} // namespace meshfl::dataset
