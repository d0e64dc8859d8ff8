#include "meshfl/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace meshfl::netsim {

LinkModel LinkModel::full_mesh(std::size_t nodes, double latency_s, double drop_prob) {
    LinkModel model(nodes);
    for (NodeId a = 0; a < nodes; ++a) {
        for (NodeId b = 0; b < nodes; ++b) {
            if (a == b) continue;
            model.at(a, b) = LinkParams{latency_s, drop_prob, true};
        }
    }
    return model;
}

LinkParams& LinkModel::at(NodeId from, NodeId to) {
    if (from >= nodes_ || to >= nodes_) throw std::out_of_range("link index out of range");
    return links_[from * nodes_ + to];
}

const LinkParams& LinkModel::at(NodeId from, NodeId to) const {
    if (from >= nodes_ || to >= nodes_) throw std::out_of_range("link index out of range");
    return links_[from * nodes_ + to];
}

void EventQueue::schedule(double time, EventKind kind) {
    if (time < now_) throw std::invalid_argument("causality violation");
    heap_.push(SimEvent{time, next_seq_++, std::move(kind)});
}

SimEvent EventQueue::pop() {
    if (heap_.empty()) throw std::logic_error("pop from empty event queue");
    SimEvent event = heap_.top();
    heap_.pop();
    now_ = event.time;
    return event;
}

std::optional<SimEvent> send(const LinkModel& links, Packet packet, double now, SeededRng& rng) {
    const LinkParams& link = links.at(packet.src, packet.dst);
    if (!link.connected) return std::nullopt;
    if (rng.chance(link.drop_prob)) return std::nullopt;
    return SimEvent{now + link.latency_s, 0, Deliver{std::move(packet)}};
}

void Scenario::validate() const {
    if (num_nodes < 2) throw std::invalid_argument("scenario needs a server and at least one worker");
    if (links.nodes() != num_nodes) throw std::invalid_argument("link matrix size mismatch");
    if (decision_node >= num_nodes) throw std::invalid_argument("decision node out of range");
    if (trace.num_routes < 1 || trace.steps() < lstm.seq_len + 1)
        throw std::invalid_argument("trace too short");
    lstm.validate();
    if (selector.mode == SelectorMode::Mode::predictive &&
        selector.params.size() != lstm.param_count())
        throw std::invalid_argument("parameter shape mismatch");
    if (fl_rounds < 0) throw std::invalid_argument("fl_rounds must be >= 0");
    if (fl_rounds > 0) {
        if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
        if (initial_params.size() != lstm.param_count())
            throw std::invalid_argument("parameter shape mismatch");
        if (worker_samples.size() != num_nodes - 1)
            throw std::invalid_argument("one sample set per worker required");
        for (const auto& samples : worker_samples)
            if (samples.empty()) throw std::invalid_argument("no samples");
        if (fl_round_period_s <= 0.0) throw std::invalid_argument("round period must be > 0");
    }
    if (ogm_interval_s <= 0.0 || cost_tick_s <= 0.0)
        throw std::invalid_argument("timer intervals must be > 0");
    if (ogm_ttl < 1) throw std::invalid_argument("ogm_ttl must be >= 1");
}

namespace {

class Simulator {
public:
    explicit Simulator(const Scenario& scenario)
        : sc_(scenario), net_rng_(derive_seed(scenario.master_seed, SeedStream::network)) {
        sc_.validate();
        for (NodeId id = 0; id < sc_.num_nodes; ++id)
            nodes_.emplace_back(id, sc_.ogm_ttl);
        if (sc_.fl_rounds > 0) {
            global_params_ = sc_.initial_params;
            for (std::size_t w = 0; w < sc_.worker_samples.size(); ++w) {
                fl::ClientState client;
                client.node = static_cast<NodeId>(w + 1);
                client.params = global_params_;
                client.adam = nn::AdamState::zeros(global_params_.size(), sc_.learning_rate);
                client.samples = sc_.worker_samples[w];
                client.rng = SeededRng(derive_seed(sc_.master_seed, SeedStream::train_base, w));
                clients_.push_back(std::move(client));
            }
        }
        log_.mode = sc_.selector.mode == SelectorMode::Mode::baseline ? "baseline" : "predictive";
    }

    MetricsLog run() {
        const std::size_t t_len = sc_.trace.steps();
        horizon_ = static_cast<double>(t_len - 1) * sc_.cost_tick_s;
        for (std::size_t t = 0; t < t_len; ++t)
            queue_.schedule(static_cast<double>(t) * sc_.cost_tick_s, CostTick{t});
        for (NodeId id = 0; id < sc_.num_nodes; ++id) queue_.schedule(0.0, OgmTimer{id});
        if (sc_.fl_rounds > 0) queue_.schedule(0.0, FlRoundStart{1});

        while (!queue_.empty()) {
            const SimEvent event = queue_.pop();
            std::visit([this, &event](const auto& kind) { handle(event.time, kind); }, event.kind);
        }
        if (sc_.fl_rounds > 0 && completed_rounds_ != sc_.fl_rounds)
            throw std::runtime_error("round failed");
        return log_;
    }

private:
    void transmit(Packet packet, double now) {
        ++log_.packets_sent;
        auto event = send(sc_.links, std::move(packet), now, net_rng_);
        if (event) {
            queue_.schedule(event->time, event->kind);
        } else {
            ++log_.packets_dropped;
        }
    }

    void handle(double now, const OgmTimer& timer) {
        if (now > horizon_) return;
        const batman::OgmPacket ogm = nodes_[timer.node].originate_next();
        for (NodeId dst = 0; dst < sc_.num_nodes; ++dst) {
            if (dst == timer.node || !sc_.links.at(timer.node, dst).connected) continue;
            transmit(Packet{timer.node, dst, ogm}, now);
        }
        const double next = now + sc_.ogm_interval_s;
        if (next <= horizon_) queue_.schedule(next, OgmTimer{timer.node});
    }

    void handle(double now, const CostTick& tick) {
        if (tick.t < sc_.lstm.seq_len) return;
        const std::size_t routes = sc_.trace.num_routes;
        std::vector<double> row(routes);
        for (std::size_t r = 0; r < routes; ++r)
            row[r] = sc_.trace.at(tick.t, static_cast<RouteId>(r));

        RouteId choice;
        if (sc_.selector.mode == SelectorMode::Mode::baseline) {
            choice = batman::select_next_hop_baseline(row);
        } else {
            std::vector<double> window;
            window.reserve(sc_.lstm.seq_len * routes);
            for (std::size_t t = tick.t - sc_.lstm.seq_len; t < tick.t; ++t)
                for (std::size_t r = 0; r < routes; ++r)
                    window.push_back(sc_.trace.at(t, static_cast<RouteId>(r)));
            choice = batman::select_next_hop_predictive(window, sc_.selector.params, sc_.lstm);
        }

        TickRecord record;
        record.t = tick.t;
        record.chosen_route = choice;
        record.step_cost = row[choice];
        record.cumulative_cost =
            (log_.ticks.empty() ? 0.0 : log_.ticks.back().cumulative_cost) + record.step_cost;
        record.switches = log_.ticks.empty()
                              ? 0
                              : log_.ticks.back().switches +
                                    (choice != log_.ticks.back().chosen_route ? 1 : 0);
        log_.ticks.push_back(record);
    }

    void handle(double now, const Deliver& deliver) {
        ++log_.packets_delivered;
        const Packet& packet = deliver.packet;
        if (const auto* ogm = std::get_if<batman::OgmPacket>(&packet.body)) {
            auto forwarded = nodes_[packet.dst].handle_ogm(*ogm);
            if (ogm->originator != packet.dst)
                nodes_[packet.dst].update_route(ogm->originator, now);
            if (forwarded) {
                for (NodeId dst = 0; dst < sc_.num_nodes; ++dst) {
                    if (dst == packet.dst || !sc_.links.at(packet.dst, dst).connected) continue;
                    transmit(Packet{packet.dst, dst, *forwarded}, now);
                }
            }
            return;
        }
        const auto& payload = std::get<FlPayload>(packet.body);
        if (payload.kind == FlPayload::Kind::broadcast) {
            handle_broadcast(now, packet.dst, payload.bytes);
        } else {
            handle_upload(now, payload.bytes);
        }
    }

    void handle_broadcast(double now, NodeId node, const std::vector<std::uint8_t>& bytes) {
        const fl::ParamMessage message = fl::deserialize_params(bytes);
        fl::ClientState& client = clients_[node - 1];
        auto& trained = last_trained_round_[node];
        if (message.round <= trained) {
            // Retransmission pass: the epoch for this round already ran.
            transmit(Packet{node, kServerNode, FlPayload{FlPayload::Kind::upload, cached_upload_[node]}},
                     now);
            return;
        }
        client.params = message.params;
        const double loss = fl::client_local_epoch(client, sc_.batch_size, sc_.lstm);
        local_losses_[message.round][node] = loss;
        trained = message.round;
        cached_upload_[node] = fl::serialize_params(
            fl::ParamMessage{node, message.round, client.params});
        transmit(Packet{node, kServerNode, FlPayload{FlPayload::Kind::upload, cached_upload_[node]}},
                 now);
    }

    void handle_upload(double now, const std::vector<std::uint8_t>& bytes) {
        const fl::ParamMessage message = fl::deserialize_params(bytes);
        if (static_cast<int>(message.round) != current_round_ || round_complete_) return;
        if (uploads_.count(message.sender)) return; // duplicate retransmission
        uploads_.emplace(message.sender, message);
        if (uploads_.size() == clients_.size()) complete_round(now);
    }

    void complete_round(double now) {
        std::vector<fl::ParamMessage> messages;
        std::vector<NodeId> expected;
        for (const auto& [sender, message] : uploads_) messages.push_back(message);
        for (const auto& client : clients_) expected.push_back(client.node);
        global_params_ = fl::aggregate(messages, expected);
        round_complete_ = true;
        ++completed_rounds_;

        fl::RoundReport report;
        report.round = current_round_;
        for (const auto& client : clients_)
            report.client_losses.emplace_back(client.node,
                                              local_losses_[current_round_][client.node]);
        report.global_loss = fl::global_objective(global_params_, clients_, sc_.lstm);
        report.elapsed_ms = (now - round_start_time_) * 1000.0;
        log_.rounds.push_back(std::move(report));

        if (current_round_ < sc_.fl_rounds) {
            const double planned = round_start_time_ + sc_.fl_round_period_s;
            queue_.schedule(std::max(planned, now), FlRoundStart{current_round_ + 1});
        }
    }

    void handle(double now, const FlRoundStart& start) {
        current_round_ = start.round;
        round_start_time_ = now;
        round_complete_ = false;
        uploads_.clear();

        if (!sc_.fl_via_network) {
            fl::RoundReport report = fl::run_round(clients_, global_params_, sc_.batch_size,
                                                   sc_.lstm, start.round, sc_.parallel_clients);
            round_complete_ = true;
            ++completed_rounds_;
            log_.rounds.push_back(std::move(report));
            if (start.round < sc_.fl_rounds)
                queue_.schedule(now + sc_.fl_round_period_s, FlRoundStart{start.round + 1});
            return;
        }

        broadcast_round(now, start.round);
        queue_.schedule(now + sc_.fl_round_period_s, FlRoundDeadline{start.round, 1});
    }

    void handle(double now, const FlRoundDeadline& deadline) {
        if (deadline.round != current_round_ || round_complete_) return;
        if (deadline.attempt >= 2) throw std::runtime_error("round failed");
        broadcast_round(now, deadline.round);
        queue_.schedule(now + sc_.fl_round_period_s, FlRoundDeadline{deadline.round, 2});
    }

    void broadcast_round(double now, int round) {
        const auto bytes = fl::serialize_params(
            fl::ParamMessage{kServerNode, static_cast<std::uint32_t>(round), global_params_});
        for (const auto& client : clients_)
            transmit(Packet{kServerNode, client.node, FlPayload{FlPayload::Kind::broadcast, bytes}},
                     now);
    }

    Scenario sc_;
    EventQueue queue_;
    std::vector<batman::BatmanNode> nodes_;
    SeededRng net_rng_;
    double horizon_ = 0.0;

    ParameterVector global_params_;
    std::vector<fl::ClientState> clients_;
    int current_round_ = 0;
    int completed_rounds_ = 0;
    double round_start_time_ = 0.0;
    bool round_complete_ = false;
    std::map<NodeId, fl::ParamMessage> uploads_;
    std::map<NodeId, std::uint32_t> last_trained_round_;
    std::map<NodeId, std::vector<std::uint8_t>> cached_upload_;
    std::map<std::uint32_t, std::map<NodeId, double>> local_losses_;

    MetricsLog log_;
};

} // namespace

MetricsLog run_scenario(const Scenario& scenario) {
    Simulator sim(scenario);
    return sim.run();
}

namespace {

double first_switch_tick(const MetricsLog& log) {
    for (const auto& tick : log.ticks)
        if (tick.switches >= 1) return static_cast<double>(tick.t);
    return -1.0;
}

double final_loss(const MetricsLog& log) {
    if (log.rounds.empty()) return std::numeric_limits<double>::quiet_NaN();
    return log.rounds.back().global_loss;
}

} // namespace

CompareSummary compare_runs(const MetricsLog& a, const MetricsLog& b) {
    if (a.ticks.size() != b.ticks.size()) throw std::invalid_argument("mismatched lengths");
    CompareSummary summary;
    summary.switch_time_delta = first_switch_tick(a) - first_switch_tick(b);
    const double cost_a = a.ticks.empty() ? 0.0 : a.ticks.back().cumulative_cost;
    const double cost_b = b.ticks.empty() ? 0.0 : b.ticks.back().cumulative_cost;
    summary.cumulative_cost_delta = cost_a - cost_b;
    summary.final_loss_a = final_loss(a);
    summary.final_loss_b = final_loss(b);
    if (!a.rounds.empty() && a.rounds.size() == b.rounds.size()) {
        summary.round_loss_abs_diff.reserve(a.rounds.size());
        for (std::size_t i = 0; i < a.rounds.size(); ++i)
            summary.round_loss_abs_diff.push_back(
                std::abs(a.rounds[i].global_loss - b.rounds[i].global_loss));
    }
    return summary;
}

} // namespace meshfl::netsim
