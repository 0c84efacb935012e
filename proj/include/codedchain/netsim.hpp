#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "codedchain/consensus.hpp"

namespace codedchain {

/// Simulator configuration, mirrored by the JSON scenario files.
struct Scenario {
    int N = 16, K = 2, Q = 4, f = 0;
    std::uint64_t q = 2147483647ULL;  // field prime
    int gamma = 2;                    // fingerprint length
    int lambda = 2;                   // hash length in field elements
    std::uint64_t seed = 1;
    int epochs = 1;
    double gst = 0.0;
    double delta = 1.0;          // max post-GST delay
    double pre_gst_cap = 10.0;   // finite pre-GST delay bound
    bool pre_gst_max = false;    // adversary stretches all pre-GST delays to the cap
    std::string leader_schedule = "round_robin";  // or "round_robin_honest"
    std::vector<int> explicit_schedule;           // used when non-empty
    std::string adversary = "none";
    std::vector<int> adversary_nodes;
    std::string crypto_mode = "test";  // or "real"
    int uov_oil = 2, uov_vinegar = 4, uov_E = 2;
    int C = 2;  // address length
    int genesis_per_shard = 0;  // 0 means K*Q
    int txs_per_epoch = -1;     // -1 means Q*K*K
    std::vector<std::pair<int, int>> invalid_txs;  // (epoch, count)
    double timeout_base = 0;    // 0 means 4*delta
    int max_views = 0;          // 0 means 30*epochs + 60

    static Scenario from_json_text(const std::string& text);
    std::string to_json_text() const;

    EpochParams dims() const;
    int genesis_count() const { return genesis_per_shard > 0 ? genesis_per_shard : K * Q; }
    int shard_size_before(int epoch) const;  // M(t-1)
    int degree_for_epoch(int epoch) const;
    int max_degree() const;
    AdvKind adv_kind() const;
    std::vector<int> build_schedule() const;
    /// Throws on invariant violations (Theorem bound, f < N/3, field size).
    void validate() const;
};

struct PhaseMetrics {
    std::uint64_t msgs = 0;
    std::uint64_t bits = 0;
};

struct EpochReport {
    int epoch = 0;
    int commit_view = 0;
    int views_used = 1;
    bool oracle_equal = true;
    bool strips_match = true;
    int confirmed = 0;
    int collateral = 0;
    std::uint64_t bits = 0;
};

struct ViewStat {
    int view = 0;
    int leader = -1;
    double first_seen = 0;
    bool committed = false;
    int prepare_acks = 0;
    int agree_failures = 0;
    int homology_failures = 0;
    int decode_failures = 0;
    int timeouts = 0;
    std::uint64_t phase_msgs = 0;  // the three QC-forming exchanges
    std::uint64_t total_msgs = 0;  // including new-view and decide
};

struct RunReport {
    bool safety_violation = false;
    bool all_epochs_committed = false;
    bool oracle_all_equal = true;
    bool strips_all_match = true;
    int epochs_committed = 0;
    std::uint64_t submitted_real = 0;
    std::vector<std::uint64_t> confirmed_ids;
    std::vector<std::uint64_t> collateral_ids;
    std::vector<EpochReport> epochs;
    std::vector<ViewStat> views;
    std::uint64_t sent_messages = 0;
    std::uint64_t delivered_messages = 0;
    std::uint64_t undelivered_at_stop = 0;
};

struct Metrics {
    std::map<std::string, PhaseMetrics> phases;  // keyed by message type name
    std::uint64_t total_msgs = 0;
    std::uint64_t total_bits = 0;
    std::uint64_t max_view_phase_msgs = 0;
    std::uint64_t max_view_total_msgs = 0;
};

struct RunResult {
    Metrics metrics;
    RunReport report;

    /// JSON-lines: one record per epoch plus a summary record, schema 1.
    std::string to_json_lines(const Scenario& s) const;
};

/// Idealized wire size: field elements cost ceil(log2 q) bits, hashes lambda
/// of them, signatures one constant unit, quorum identifiers N bits.
std::uint64_t meter_msg(const Msg& m, const Scenario& s);
constexpr std::uint64_t kSigBits = 256;
constexpr std::uint64_t kEnvelopeBits = 64;

RunResult run_scenario(const Scenario& s);

}  // namespace codedchain
