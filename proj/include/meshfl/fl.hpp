#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "meshfl/core.hpp"
#include "meshfl/dataset.hpp"
#include "meshfl/nn.hpp"

namespace meshfl::fl {

/// One federated client: its node id, current model replica, persistent Adam
/// moments (only weights are ever averaged), its private samples, and the
/// shuffle stream that drives its local epochs.
struct ClientState {
    NodeId node = 0;
    ParameterVector params;
    nn::AdamState adam;
    std::vector<nn::WindowedSample> samples;
    SeededRng rng{0};
};

/// Serialized parameter upload/broadcast.
struct ParamMessage {
    NodeId sender = 0;
    std::uint32_t round = 0;
    ParameterVector params;
};

/// Outcome of one synchronous round.
struct RoundReport {
    int round = 0;
    std::vector<std::pair<NodeId, double>> client_losses; // ascending node id
    double global_loss = 0.0;                             // F(w) after aggregation
    double elapsed_ms = 0.0;                              // simulated, 0 when out-of-band
};

// FLP1 wire format (little-endian throughout):
//   bytes 0..3   magic "FLP1"
//   bytes 4..7   u32 round
//   bytes 8..11  u32 sender id
//   bytes 12..19 u64 parameter count d
//   then d IEEE-754 binary64 values
//   then u32 CRC-32 of all preceding bytes
// Round-trip is bitwise identity; any structural or checksum failure throws
// std::runtime_error("corrupt parameter message").
std::vector<std::uint8_t> serialize_params(const ParamMessage& message);
ParamMessage deserialize_params(std::span<const std::uint8_t> bytes);

/// One local pass: nn::train_epoch over the client's own samples with its
/// persistent Adam state and shuffle stream. Returns the epoch mean loss.
double client_local_epoch(ClientState& client, std::size_t batch_size,
                          const nn::LstmConfig& config);

/// FedAvg over one synchronous round's uploads: every expected client must be
/// present exactly once and all messages must carry the same round. Payloads
/// are averaged in ascending sender id regardless of arrival order.
/// Throws std::runtime_error("round incomplete") on a missing client and
/// std::invalid_argument on mixed rounds, duplicates, or unexpected senders.
ParameterVector aggregate(const std::vector<ParamMessage>& messages,
                          const std::vector<NodeId>& expected_clients);

/// Mean per-sample binary cross entropy of the single parameter vector `w`
/// over the union of all client datasets, clients visited in ascending node
/// id. Throws std::invalid_argument("no samples") if the union is empty.
double global_objective(const ParameterVector& w, const std::vector<ClientState>& clients,
                        const nn::LstmConfig& config);

/// One synchronous round, in process: install `global_params` on every
/// client, run one local epoch each (optionally on worker threads; results
/// are committed in ascending node id either way), serialize the uploads, and
/// aggregate. On return every client and `global_params` hold the new global
/// model.
RoundReport run_round(std::vector<ClientState>& clients, ParameterVector& global_params,
                      std::size_t batch_size, const nn::LstmConfig& config, int round,
                      bool parallel = false);

/// Runs rounds until `max_rounds` or until |F_k - F_{k-1}| < convergence_tol
/// (first comparable after round 2). With tol = 0 this is a pure K-round
/// loop. Returns one report per executed round, indices 1..k.
std::vector<RoundReport> run_training(std::vector<ClientState>& clients,
                                      ParameterVector& global_params, int max_rounds,
                                      double convergence_tol, std::size_t batch_size,
                                      const nn::LstmConfig& config, bool parallel = false);

} // namespace meshfl::fl
