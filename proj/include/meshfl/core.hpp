#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace meshfl {

// Node ids are dense 0..M-1 within a scenario; id 0 is the FL server.
using NodeId = std::uint32_t;

// Route ids are dense 0..R-1 at a decision node.
using RouteId = std::uint32_t;

// Flat ordered list of all trainable model weights. The layout is the
// ordered concatenation of (layer-1 LSTM weights, layer-2 LSTM weights,
// output-layer weights); see nn.hpp for the exact block order.
using ParameterVector = std::vector<double>;

constexpr NodeId kServerNode = 0;

/// Deterministic 64-bit generator: xoshiro256** 1.0 (Blackman & Vigna),
/// state seeded with splitmix64 (Steele, Lea & Flood). Both are specified
/// purely in terms of integer constants, so identical seeds yield identical
/// sequences on every platform. Not safe for concurrent use.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed);

    std::uint64_t seed() const { return seed_; }

    /// Next raw 64-bit value.
    std::uint64_t next_u64();

    /// Unbiased integer in [0, n) via rejection sampling. n must be > 0.
    std::uint64_t next_below(std::uint64_t n);

    /// Uniform double in [lo, hi). Throws std::invalid_argument("empty range")
    /// if lo >= hi.
    double uniform(double lo, double hi);

    /// Uniform double in [0, 1) with 53 random bits.
    double unit();

    /// Gaussian via Box-Muller; consumes exactly two uniform draws per call.
    double normal(double mean, double stddev);

    /// Bernoulli draw; consumes one uniform.
    bool chance(double probability);

    /// Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& values) {
        if (values.size() < 2) return;
        for (std::size_t i = values.size() - 1; i > 0; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i + 1));
            std::swap(values[i], values[j]);
        }
    }

private:
    std::uint64_t state_[4];
    std::uint64_t seed_;
};

// Purpose tags for deriving independent sub-streams from one master seed.
// Derivation is splitmix64 applied to (master ^ mix(tag)), documented in
// derive_seed(); the same master seed always yields the same family.
enum class SeedStream : std::uint64_t {
    init = 1,       // model weight initialization
    partition = 2,  // dataset partitioning across clients
    network = 3,    // link-level drop decisions
    trace = 4,      // trace noise
    train_base = 16 // + worker index: per-client shuffle streams
};

std::uint64_t derive_seed(std::uint64_t master, SeedStream stream, std::uint64_t index = 0);

/// Element-wise arithmetic mean of client parameter vectors, (1/J) * sum w_j.
/// Summation is pairwise (split at floor(n/2)) over the list in the order
/// given, so averaging J identical vectors is exact whenever J is a power of
/// two. Callers that need an id-fixed order sort first (see fl::aggregate).
/// Throws std::invalid_argument("no clients") on an empty list and
/// std::invalid_argument("parameter shape mismatch") on unequal lengths.
ParameterVector param_average(const std::vector<ParameterVector>& params);

/// Per-route time series of link costs; row-major T x R, lower is better.
struct LinkCostTrace {
    std::size_t num_routes = 0;
    std::vector<double> costs; // length = steps() * num_routes

    std::size_t steps() const { return num_routes == 0 ? 0 : costs.size() / num_routes; }

    /// costs[t][r]; throws std::out_of_range on a bad index.
    double at(std::size_t t, RouteId r) const;

    /// Mutable row append; row.size() must equal num_routes.
    void push_row(std::span<const double> row);
};

/// Column-wise assembly: all columns must share one length.
LinkCostTrace trace_from_columns(const std::vector<std::vector<double>>& columns);

/// Accessor mirroring LinkCostTrace::at as a free function.
double trace_at(const LinkCostTrace& trace, std::size_t t, RouteId r);

// FNV-1a 64-bit, used for file/content fingerprints in manifests and tests.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);
std::uint64_t fnv1a64(const void* data, std::size_t size);

// CRC-32 (IEEE, reflected polynomial 0xEDB88320), used by the FLP1 wire format.
std::uint32_t crc32(std::span<const std::uint8_t> bytes);

} // namespace meshfl
