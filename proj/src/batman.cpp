#include "meshfl/batman.hpp"

#include <algorithm>
#include <stdexcept>

namespace meshfl::batman {

void NeighborTable::record(NodeId originator, NodeId neighbor, std::uint32_t seqno) {
    OriginatorRecord& rec = originators_[originator];
    rec.latest_seqno = std::max(rec.latest_seqno, seqno);
    rec.received[neighbor].insert(seqno);
    prune(rec);
}

void NeighborTable::prune(OriginatorRecord& rec) const {
    if (rec.latest_seqno + 1 < window_) return;
    const std::uint32_t oldest = rec.latest_seqno + 1 - static_cast<std::uint32_t>(window_);
    for (auto& [neighbor, seqnos] : rec.received)
        seqnos.erase(seqnos.begin(), seqnos.lower_bound(oldest));
}

double NeighborTable::quality(NodeId originator, NodeId neighbor) const {
    auto rec = originators_.find(originator);
    if (rec == originators_.end()) return 0.0;
    auto per_neighbor = rec->second.received.find(neighbor);
    if (per_neighbor == rec->second.received.end()) return 0.0;
    // Count receptions inside the window ending at the latest seqno seen.
    const std::uint32_t latest = rec->second.latest_seqno;
    std::size_t count = 0;
    for (std::uint32_t s : per_neighbor->second) {
        if (s <= latest && latest - s < window_) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(window_);
}

std::vector<NodeId> NeighborTable::neighbors(NodeId originator) const {
    std::vector<NodeId> out;
    auto rec = originators_.find(originator);
    if (rec == originators_.end()) return out;
    for (const auto& [neighbor, seqnos] : rec->second.received)
        if (!seqnos.empty()) out.push_back(neighbor);
    return out;
}

double quality_to_cost(double quality) {
    return 1.0 / std::max(quality, 0.01);
}

OgmPacket BatmanNode::originate(std::uint32_t seqno) {
    if (originated_any_ && seqno <= last_own_seqno_)
        throw std::invalid_argument("seqno regression");
    last_own_seqno_ = seqno;
    originated_any_ = true;
    return OgmPacket{id_, seqno, id_, initial_ttl_};
}

OgmPacket BatmanNode::originate_next() {
    return originate(originated_any_ ? last_own_seqno_ + 1 : 1);
}

std::optional<OgmPacket> BatmanNode::handle_ogm(const OgmPacket& packet) {
    if (packet.originator == id_) return std::nullopt; // own echo, not recorded
    table_.record(packet.originator, packet.sender, packet.seqno);
    const auto key = std::make_pair(packet.originator, packet.seqno);
    const bool first_sight = seen_.insert(key).second;
    if (!first_sight || packet.ttl <= 1) return std::nullopt;
    OgmPacket forwarded = packet;
    forwarded.sender = id_;
    forwarded.ttl = packet.ttl - 1;
    return forwarded;
}

void BatmanNode::update_route(NodeId originator, double now) {
    const std::vector<NodeId> candidates = table_.neighbors(originator);
    if (candidates.empty()) return;
    NodeId best = candidates.front();
    double best_quality = table_.quality(originator, best);
    for (NodeId n : candidates) {
        const double q = table_.quality(originator, n);
        if (q > best_quality) {
            best = n;
            best_quality = q;
        }
    }
    routes_[originator] = RouteEntry{best, quality_to_cost(best_quality), now};
}

RouteId select_next_hop_baseline(std::span<const double> costs) {
    if (costs.empty()) throw std::invalid_argument("no routes");
    RouteId best = 0;
    for (std::size_t r = 1; r < costs.size(); ++r)
        if (costs[r] < costs[best]) best = static_cast<RouteId>(r);
    return best;
}

RouteId select_next_hop_predictive(std::span<const double> window, const ParameterVector& params,
                                   const nn::LstmConfig& config) {
    const nn::ForwardCache cache = nn::lstm_forward(params, window, config);
    return nn::predict(cache.probability).chosen_route;
}

} // namespace meshfl::batman
