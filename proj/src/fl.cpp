#include "meshfl/fl.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <future>
#include <stdexcept>

namespace meshfl::fl {

namespace {

constexpr std::uint8_t kMagic[4] = {'F', 'L', 'P', '1'};
constexpr std::size_t kHeaderSize = 20; // magic + round + sender + count
constexpr std::size_t kTrailerSize = 4; // crc32

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t at) {
    return static_cast<std::uint32_t>(bytes[at]) | (static_cast<std::uint32_t>(bytes[at + 1]) << 8) |
           (static_cast<std::uint32_t>(bytes[at + 2]) << 16) |
           (static_cast<std::uint32_t>(bytes[at + 3]) << 24);
}

std::uint64_t get_u64(std::span<const std::uint8_t> bytes, std::size_t at) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[at + static_cast<std::size_t>(i)];
    return v;
}

[[noreturn]] void corrupt() {
    throw std::runtime_error("corrupt parameter message");
}

} // namespace

std::vector<std::uint8_t> serialize_params(const ParamMessage& message) {
    for (double w : message.params)
        if (!std::isfinite(w)) throw std::invalid_argument("non-finite parameter");

    std::vector<std::uint8_t> out;
    out.reserve(kHeaderSize + message.params.size() * 8 + kTrailerSize);
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    put_u32(out, message.round);
    put_u32(out, message.sender);
    put_u64(out, message.params.size());
    for (double w : message.params) {
        std::uint64_t bits;
        std::memcpy(&bits, &w, sizeof bits);
        put_u64(out, bits);
    }
    put_u32(out, crc32(out));
    return out;
}

ParamMessage deserialize_params(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderSize + kTrailerSize) corrupt();
    if (!std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) corrupt();
    const std::uint64_t count = get_u64(bytes, 12);
    if (count > (bytes.size() - kHeaderSize - kTrailerSize) / 8) corrupt();
    if (bytes.size() != kHeaderSize + count * 8 + kTrailerSize) corrupt();
    const std::uint32_t stored_crc = get_u32(bytes, bytes.size() - kTrailerSize);
    if (crc32(bytes.first(bytes.size() - kTrailerSize)) != stored_crc) corrupt();

    ParamMessage message;
    message.round = get_u32(bytes, 4);
    message.sender = get_u32(bytes, 8);
    message.params.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint64_t bits = get_u64(bytes, kHeaderSize + i * 8);
        std::memcpy(&message.params[i], &bits, sizeof(double));
    }
    return message;
}

double client_local_epoch(ClientState& client, std::size_t batch_size,
                          const nn::LstmConfig& config) {
    if (client.samples.empty()) throw std::invalid_argument("no samples");
    return nn::train_epoch(client.params, client.samples, batch_size, client.adam, config,
                           client.rng);
}

ParameterVector aggregate(const std::vector<ParamMessage>& messages,
                          const std::vector<NodeId>& expected_clients) {
    if (messages.empty()) throw std::invalid_argument("no clients");
    const std::uint32_t round = messages.front().round;
    std::vector<const ParamMessage*> by_sender;
    by_sender.reserve(messages.size());
    for (const auto& m : messages) {
        if (m.round != round) throw std::invalid_argument("mixed rounds");
        by_sender.push_back(&m);
    }
    std::sort(by_sender.begin(), by_sender.end(),
              [](const ParamMessage* a, const ParamMessage* b) { return a->sender < b->sender; });
    for (std::size_t i = 1; i < by_sender.size(); ++i)
        if (by_sender[i]->sender == by_sender[i - 1]->sender)
            throw std::invalid_argument("duplicate sender");

    std::vector<NodeId> expected = expected_clients;
    std::sort(expected.begin(), expected.end());
    if (by_sender.size() != expected.size()) throw std::runtime_error("round incomplete");
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (by_sender[i]->sender != expected[i]) {
            if (std::find(expected.begin(), expected.end(), by_sender[i]->sender) == expected.end())
                throw std::invalid_argument("unexpected sender");
            throw std::runtime_error("round incomplete");
        }
    }

    std::vector<ParameterVector> payloads;
    payloads.reserve(by_sender.size());
    for (const ParamMessage* m : by_sender) payloads.push_back(m->params);
    return param_average(payloads);
}

double global_objective(const ParameterVector& w, const std::vector<ClientState>& clients,
                        const nn::LstmConfig& config) {
    std::vector<const ClientState*> ordered;
    for (const auto& c : clients) ordered.push_back(&c);
    std::sort(ordered.begin(), ordered.end(),
              [](const ClientState* a, const ClientState* b) { return a->node < b->node; });

    double sum = 0.0;
    std::size_t n = 0;
    for (const ClientState* client : ordered) {
        for (const auto& sample : client->samples) {
            const nn::ForwardCache cache = nn::lstm_forward(w, sample.window, config);
            sum += nn::bce_loss(cache.probability, sample.label);
            ++n;
        }
    }
    if (n == 0) throw std::invalid_argument("no samples");
    return sum / static_cast<double>(n);
}

RoundReport run_round(std::vector<ClientState>& clients, ParameterVector& global_params,
                      std::size_t batch_size, const nn::LstmConfig& config, int round,
                      bool parallel) {
    if (clients.empty()) throw std::invalid_argument("no clients");
    if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");

    // Broadcast.
    for (auto& client : clients) client.params = global_params;

    // Local epochs; results committed in ascending node id below regardless
    // of completion order.
    std::vector<double> losses(clients.size(), 0.0);
    if (parallel) {
        std::vector<std::future<double>> futures;
        futures.reserve(clients.size());
        for (auto& client : clients)
            futures.push_back(std::async(std::launch::async, [&client, batch_size, &config] {
                return client_local_epoch(client, batch_size, config);
            }));
        for (std::size_t i = 0; i < futures.size(); ++i) losses[i] = futures[i].get();
    } else {
        for (std::size_t i = 0; i < clients.size(); ++i)
            losses[i] = client_local_epoch(clients[i], batch_size, config);
    }

    // Collect uploads through the wire format, then aggregate.
    std::vector<ParamMessage> uploads;
    std::vector<NodeId> expected;
    for (const auto& client : clients) {
        const auto bytes = serialize_params(
            ParamMessage{client.node, static_cast<std::uint32_t>(round), client.params});
        uploads.push_back(deserialize_params(bytes));
        expected.push_back(client.node);
    }
    global_params = aggregate(uploads, expected);
    for (auto& client : clients) client.params = global_params;

    RoundReport report;
    report.round = round;
    std::vector<std::size_t> order(clients.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&clients](std::size_t a, std::size_t b) { return clients[a].node < clients[b].node; });
    for (std::size_t i : order) report.client_losses.emplace_back(clients[i].node, losses[i]);
    report.global_loss = global_objective(global_params, clients, config);
    return report;
}

std::vector<RoundReport> run_training(std::vector<ClientState>& clients,
                                      ParameterVector& global_params, int max_rounds,
                                      double convergence_tol, std::size_t batch_size,
                                      const nn::LstmConfig& config, bool parallel) {
    if (max_rounds < 1) throw std::invalid_argument("need at least one round");
    std::vector<RoundReport> reports;
    for (int k = 1; k <= max_rounds; ++k) {
        reports.push_back(run_round(clients, global_params, batch_size, config, k, parallel));
        if (reports.size() >= 2) {
            const double delta =
                std::abs(reports.back().global_loss - reports[reports.size() - 2].global_loss);
            if (delta < convergence_tol) break;
        }
    }
    return reports;
}

} // namespace meshfl::fl
