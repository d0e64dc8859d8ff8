#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "meshfl/core.hpp"
#include "meshfl/nn.hpp"

namespace meshfl::batman {

constexpr int kDefaultTtl = 16;
constexpr std::size_t kOgmWindow = 8; // origination intervals per quality window

/// Originator message. ttl drops by exactly 1 per rebroadcast; a packet with
/// ttl 1 is recorded but not forwarded further.
struct OgmPacket {
    NodeId originator = 0;
    std::uint32_t seqno = 0;
    NodeId sender = 0; // last hop
    int ttl = kDefaultTtl;
};

/// Reception bookkeeping for link-quality estimation. For each originator the
/// table tracks the highest sequence number seen anywhere; quality toward a
/// neighbor is the fraction of the last kOgmWindow sequence numbers that
/// arrived via that neighbor.
class NeighborTable {
public:
    explicit NeighborTable(std::size_t window = kOgmWindow) : window_(window) {}

    void record(NodeId originator, NodeId neighbor, std::uint32_t seqno);

    /// Reception fraction in [0,1]; 0 for an unknown (originator, neighbor).
    double quality(NodeId originator, NodeId neighbor) const;

    /// Neighbors with at least one recorded reception for this originator.
    std::vector<NodeId> neighbors(NodeId originator) const;

    std::size_t window() const { return window_; }

private:
    struct OriginatorRecord {
        std::uint32_t latest_seqno = 0;
        std::map<NodeId, std::set<std::uint32_t>> received; // per neighbor
    };
    std::size_t window_;
    std::map<NodeId, OriginatorRecord> originators_;

    void prune(OriginatorRecord& rec) const;
};

struct RouteEntry {
    NodeId next_hop = 0;
    double metric = 0.0; // cost at selection time, lower is better
    double time = 0.0;   // simulated seconds of the selection
};

/// OGM reception rate converted to a cost (lower is better); quality is
/// floored at 0.01 so dead links stay finite.
double quality_to_cost(double quality);

/// Per-node protocol state machine: OGM origination with strictly increasing
/// sequence numbers, (originator, seqno) dedup, reception recording, and
/// next-hop table maintenance. Handlers are invoked sequentially by the
/// simulator; nodes share no state except packets.
class BatmanNode {
public:
    BatmanNode(NodeId id, int initial_ttl = kDefaultTtl, std::size_t window = kOgmWindow)
        : id_(id), initial_ttl_(initial_ttl), table_(window) {}

    NodeId id() const { return id_; }

    /// New OGM with the given sequence number; throws
    /// std::invalid_argument("seqno regression") unless it exceeds every
    /// previously originated seqno.
    OgmPacket originate(std::uint32_t seqno);

    /// Convenience: originate with the next consecutive sequence number.
    OgmPacket originate_next();

    /// Processes a received OGM. Records the reception for
    /// (originator, sender) and returns the rebroadcast packet iff this
    /// (originator, seqno) is unseen and ttl > 1; echoes of the node's own
    /// OGMs are dropped without recording.
    std::optional<OgmPacket> handle_ogm(const OgmPacket& packet);

    double link_quality(NodeId originator, NodeId neighbor) const {
        return table_.quality(originator, neighbor);
    }
    const NeighborTable& neighbor_table() const { return table_; }

    /// Re-selects the best next hop (highest quality, lowest id on ties) for
    /// the originator and stamps the entry with `now`. No-op if nothing has
    /// been heard from that originator.
    void update_route(NodeId originator, double now);

    const std::map<NodeId, RouteEntry>& routing_table() const { return routes_; }

    /// True the first time this (originator, seqno) is processed; used by
    /// flooding tests to count deliveries.
    bool has_seen(NodeId originator, std::uint32_t seqno) const {
        return seen_.count({originator, seqno}) > 0;
    }

private:
    NodeId id_;
    int initial_ttl_;
    NeighborTable table_;
    std::uint32_t last_own_seqno_ = 0;
    bool originated_any_ = false;
    std::set<std::pair<NodeId, std::uint32_t>> seen_;
    std::map<NodeId, RouteEntry> routes_;
};

/// Threshold baseline: argmin cost, ties to the lowest route id.
/// Throws std::invalid_argument on an empty cost list.
RouteId select_next_hop_baseline(std::span<const double> costs);

/// LSTM-backed selector over a seq_len x R cost window (two-route
/// configuration): returns route 1 iff the predicted probability >= 0.5.
RouteId select_next_hop_predictive(std::span<const double> window, const ParameterVector& params,
                                   const nn::LstmConfig& config);

} // namespace meshfl::batman
