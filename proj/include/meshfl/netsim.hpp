#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <queue>
#include <string>
#include <variant>
#include <vector>

#include "meshfl/batman.hpp"
#include "meshfl/core.hpp"
#include "meshfl/fl.hpp"
#include "meshfl/nn.hpp"

namespace meshfl::netsim {

/// Directed link parameters. Disconnected pairs deliver nothing.
struct LinkParams {
    double latency_s = 0.0;
    double drop_prob = 0.0;
    bool connected = false;
};

class LinkModel {
public:
    LinkModel() = default;
    explicit LinkModel(std::size_t nodes) : nodes_(nodes), links_(nodes * nodes) {}

    static LinkModel full_mesh(std::size_t nodes, double latency_s, double drop_prob);

    std::size_t nodes() const { return nodes_; }
    LinkParams& at(NodeId from, NodeId to);
    const LinkParams& at(NodeId from, NodeId to) const;

private:
    std::size_t nodes_ = 0;
    std::vector<LinkParams> links_;
};

/// Parameter frame in flight (FLP1 bytes).
struct FlPayload {
    enum class Kind { broadcast, upload };
    Kind kind = Kind::broadcast;
    std::vector<std::uint8_t> bytes;
};

struct Packet {
    NodeId src = 0;
    NodeId dst = 0;
    std::variant<batman::OgmPacket, FlPayload> body;
};

struct Deliver {
    Packet packet;
};
struct OgmTimer {
    NodeId node;
};
struct FlRoundStart {
    int round;
};
struct FlRoundDeadline {
    int round;
    int attempt;
};
struct CostTick {
    std::size_t t;
};

using EventKind = std::variant<Deliver, OgmTimer, FlRoundStart, FlRoundDeadline, CostTick>;

/// Timestamped event; dequeued in (time, seq) lexicographic order, seq being
/// the monotonically assigned insertion tiebreak.
struct SimEvent {
    double time = 0.0;
    std::uint64_t seq = 0;
    EventKind kind;
};

/// Deterministic event queue. Scheduling before the current simulated time
/// throws std::invalid_argument("causality violation").
class EventQueue {
public:
    void schedule(double time, EventKind kind);
    SimEvent pop();
    bool empty() const { return heap_.empty(); }
    double now() const { return now_; }

private:
    struct Later {
        bool operator()(const SimEvent& a, const SimEvent& b) const {
            if (a.time != b.time) return a.time > b.time;
            return a.seq > b.seq;
        }
    };
    std::priority_queue<SimEvent, std::vector<SimEvent>, Later> heap_;
    std::uint64_t next_seq_ = 0;
    double now_ = 0.0;
};

/// One hop of transmission: with probability 1 - drop_prob returns the
/// deliver event at now + latency, otherwise (or when the pair is
/// disconnected) nothing. Drop decisions come from `rng`.
std::optional<SimEvent> send(const LinkModel& links, Packet packet, double now, SeededRng& rng);

/// Route selector wiring for the decision node.
struct SelectorMode {
    enum class Mode { baseline, predictive };
    Mode mode = Mode::baseline;
    ParameterVector params; // predictive only
};

struct TickRecord {
    std::size_t t = 0;
    RouteId chosen_route = 0;
    double step_cost = 0.0;
    double cumulative_cost = 0.0;
    std::uint64_t switches = 0;
};

/// Append-only run log: one record per decision tick and per FL round, plus
/// packet accounting.
struct MetricsLog {
    std::string mode = "baseline";
    std::vector<TickRecord> ticks;
    std::vector<fl::RoundReport> rounds;
    std::uint64_t packets_sent = 0;
    std::uint64_t packets_delivered = 0;
    std::uint64_t packets_dropped = 0;
};

/// Whole-run description: one server (node 0) plus worker nodes, scripted
/// link costs at the decision node, and the FL task.
struct Scenario {
    std::size_t num_nodes = 3; // server + workers
    LinkModel links;
    LinkCostTrace trace; // decision node's candidate routes
    NodeId decision_node = 1;
    SelectorMode selector;
    nn::LstmConfig lstm;

    int fl_rounds = 0; // 0 disables federated training
    std::size_t batch_size = 5;
    double learning_rate = 0.01;
    ParameterVector initial_params;                          // global model at round 1
    std::vector<std::vector<nn::WindowedSample>> worker_samples; // index 0 -> node 1

    double ogm_interval_s = 1.0;
    double cost_tick_s = 1.0;
    double fl_round_period_s = 1.0;
    int ogm_ttl = batman::kDefaultTtl;
    bool fl_via_network = true;  // false: out-of-band rounds for ablation
    bool parallel_clients = false;
    std::uint64_t master_seed = 0;

    void validate() const;
};

/// Runs the event loop until the trace is exhausted and all FL rounds have
/// completed. A round left incomplete at its deadline is retried once
/// (retransmission); a second failure throws
/// std::runtime_error("round failed").
MetricsLog run_scenario(const Scenario& scenario);

/// Paired deltas between two runs over the same trace length.
struct CompareSummary {
    double switch_time_delta = 0.0;    // first-switch tick of a minus b (-1 = never)
    double cumulative_cost_delta = 0.0;
    double final_loss_a = 0.0; // NaN when the log has no FL rounds
    double final_loss_b = 0.0;
    std::vector<double> round_loss_abs_diff; // filled when both sides have equal round counts
};

CompareSummary compare_runs(const MetricsLog& a, const MetricsLog& b);

} // namespace meshfl::netsim
