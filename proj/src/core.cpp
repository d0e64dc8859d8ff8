#include "meshfl/core.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace meshfl {

namespace {

inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

} // namespace

SeededRng::SeededRng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) word = splitmix64(s);
}

std::uint64_t SeededRng::next_u64() {
    // xoshiro256** 1.0
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

std::uint64_t SeededRng::next_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("empty range");
    // Rejection sampling: discard the final partial block of 2^64 / n.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % n) - 1;
    std::uint64_t x = next_u64();
    while (x > limit) x = next_u64();
    return x % n;
}

double SeededRng::unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::uniform(double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("empty range");
    double v = lo + unit() * (hi - lo);
    if (v >= hi) v = std::nextafter(hi, lo);
    return v;
}

double SeededRng::normal(double mean, double stddev) {
    // Box-Muller; u1 shifted into (0, 1] so the log is finite.
    const double u1 = 1.0 - unit();
    const double u2 = unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
}

bool SeededRng::chance(double probability) {
    return unit() < probability;
}

std::uint64_t derive_seed(std::uint64_t master, SeedStream stream, std::uint64_t index) {
    std::uint64_t x = master ^ (0xD1B54A32D192ED03ULL * (static_cast<std::uint64_t>(stream) + index));
    return splitmix64(x);
}

namespace {

// Pairwise sum of vectors[lo..hi) into out (added in place).
void pairwise_accumulate(const std::vector<ParameterVector>& vs,
                         std::size_t lo, std::size_t hi, ParameterVector& out) {
    if (hi - lo == 1) {
        const ParameterVector& v = vs[lo];
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
        return;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    ParameterVector left(out.size(), 0.0), right(out.size(), 0.0);
    pairwise_accumulate(vs, lo, mid, left);
    pairwise_accumulate(vs, mid, hi, right);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += left[i] + right[i];
}

} // namespace

ParameterVector param_average(const std::vector<ParameterVector>& params) {
    if (params.empty()) throw std::invalid_argument("no clients");
    const std::size_t d = params.front().size();
    for (const auto& p : params) {
        if (p.size() != d) throw std::invalid_argument("parameter shape mismatch");
    }
    ParameterVector sum(d, 0.0);
    pairwise_accumulate(params, 0, params.size(), sum);
    const double inv = 1.0 / static_cast<double>(params.size());
    for (auto& x : sum) x *= inv;
    return sum;
}

double LinkCostTrace::at(std::size_t t, RouteId r) const {
    if (t >= steps() || r >= num_routes) throw std::out_of_range("trace index out of range");
    return costs[t * num_routes + r];
}

void LinkCostTrace::push_row(std::span<const double> row) {
    if (row.size() != num_routes) throw std::invalid_argument("row width mismatch");
    costs.insert(costs.end(), row.begin(), row.end());
}

LinkCostTrace trace_from_columns(const std::vector<std::vector<double>>& columns) {
    if (columns.empty()) throw std::invalid_argument("no route columns");
    const std::size_t t_len = columns.front().size();
    for (const auto& c : columns) {
        if (c.size() != t_len) throw std::invalid_argument("column length mismatch");
    }
    LinkCostTrace trace;
    trace.num_routes = columns.size();
    trace.costs.resize(t_len * columns.size());
    for (std::size_t t = 0; t < t_len; ++t)
        for (std::size_t r = 0; r < columns.size(); ++r)
            trace.costs[t * columns.size() + r] = columns[r][t];
    return trace;
}

double trace_at(const LinkCostTrace& trace, std::size_t t, RouteId r) {
    return trace.at(t, r);
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::uint64_t fnv1a64(const void* data, std::size_t size) {
    return fnv1a64(std::span(static_cast<const std::uint8_t*>(data), size));
}

namespace {

struct Crc32Table {
    std::uint32_t entries[256];
    Crc32Table() {
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k)
                c = (c & 1) ? 0xEDB88320U ^ (c >> 1) : c >> 1;
            entries[i] = c;
        }
    }
};

} // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
    static const Crc32Table table;
    std::uint32_t c = 0xFFFFFFFFU;
    for (std::uint8_t b : bytes)
        c = table.entries[(c ^ b) & 0xFFU] ^ (c >> 8);
    return c ^ 0xFFFFFFFFU;
}

} // namespace meshfl
