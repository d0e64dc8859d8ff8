#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "meshfl/core.hpp"
#include "meshfl/nn.hpp"

namespace meshfl::dataset {

using nn::WindowedSample;

/// Recipe for one synthetic route-cost column.
struct TraceSpec {
    enum class Kind { constant, linear_ramp, piecewise };
    Kind kind = Kind::constant;
    double level = 1.0;             // constant
    double intercept = 1.0;         // linear_ramp
    double slope = 0.0;             // linear_ramp
    // piecewise constant: (start step, level), first entry at step 0,
    // strictly increasing starts
    std::vector<std::pair<std::size_t, double>> breakpoints;
    std::size_t length = 50;
    double noise_std = 0.0;

    void validate() const;
};

/// Windowed samples plus the dimensions needed to interpret them.
struct Dataset {
    std::size_t seq_len = 0;
    std::size_t num_routes = 0;
    std::vector<WindowedSample> samples;
};

/// Sample indices per client; disjoint, covering, size difference <= 1.
struct ClientPartition {
    std::map<NodeId, std::vector<std::size_t>> assignments;
};

/// Single-route column from a spec. Noise is i.i.d. Gaussian(0, noise_std)
/// added per step, then clamped to >= 0.01 so costs stay positive.
/// Deterministic per rng seed.
LinkCostTrace generate_trace(const TraceSpec& spec, SeededRng& rng);

/// The canonical two-route reconstruction of the hand-generated 50-step
/// training trace: route 0 constant at 2.0, route 1 ramping 1.0 + 0.05 t,
/// no noise. The ramp meets the constant route at t = 20.
LinkCostTrace make_fig3_dataset();

constexpr std::size_t kFig3Steps = 50;
constexpr std::size_t kFig3CrossingStep = 20;

/// For each t in [seq_len, T-1]: window = rows t-seq_len .. t-1 (all routes,
/// row-major), label = argmin over routes of cost[t] (ties -> route 0).
/// Returns T - seq_len samples in time order. Throws
/// std::invalid_argument("trace too short") if T < seq_len + 1.
Dataset make_windows(const LinkCostTrace& trace, std::size_t seq_len);

/// Seeded shuffle of sample indices, then round-robin assignment over
/// client_ids in the order given. Each client's index list is then sorted
/// ascending so local sample order (and therefore local batch order) is
/// independent of the shuffle; with a single client this reduces to the
/// identity assignment.
ClientPartition partition_random(std::size_t num_samples, const std::vector<NodeId>& client_ids,
                                 SeededRng& rng);

} // namespace meshfl::dataset
