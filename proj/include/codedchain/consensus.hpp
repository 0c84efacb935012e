#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <variant>
#include <vector>

#include "codedchain/crypto.hpp"
#include "codedchain/ledger.hpp"
#include "codedchain/verify.hpp"

namespace codedchain {

enum class MsgType : std::uint8_t {
    NewView,
    Prepare,
    PrepareAck,
    PreCommit,
    PreCommitAck,
    Commit,
    CommitAck,
    Decide,
};

const char* msg_type_name(MsgType t);

/// header = (cksH, cksV) plus chain linkage.
struct Header {
    Digest prev{};
    int height = 0;
    Checksum cks_h;
    Checksum cks_v;

    Digest digest() const;
};

struct QCert {
    MsgType type = MsgType::Prepare;  // phase the certificate proves
    int view = 0;
    Digest header{};
    ThresholdSig sig;
    bool genesis = false;
};

Bytes qc_message(MsgType type, int view, const Digest& header);
Bytes w_message(int view, const Digest& header, int j, std::span<const fe> value);
Bytes c_message(int view, const Digest& header, int j, std::span<const fe> value);
Bytes qi_message(int view, const std::vector<std::uint8_t>& bitmap);
std::vector<std::uint8_t> qi_bitmap(const std::vector<int>& members, int n);

struct PreparePayload {
    Header header;
    std::vector<Symbol> h_blocks;  // K coded tiny blocks, Q*R each
    std::vector<Symbol> v_blocks;
};

struct PrepareAckPayload {
    std::vector<Bytes> px;        // N signatures on (w_{i,j}, j)
    std::vector<Symbol> c_row;    // N result symbols, Q*(C+E) each
    std::vector<Bytes> c_sigs;    // N signatures on (c_{i,j}, j)
};

struct PreCommitPayload {
    std::vector<int> quorum;      // QI members, sorted node ids
    std::vector<Bytes> px_col;    // per member: signature on (w_{i,j}, j) for j = recipient
    std::vector<Symbol> c_col;    // per member: c_{i,j}
    std::vector<Bytes> c_sig_col;
};

struct PreCommitAckPayload {
    PartialIndicator gw;
    PartialSig partial_qi;  // pi-partial on the quorum identifier
};

struct CommitPayload {
    std::vector<int> quorum;
    MergedIndicator gw;
    ThresholdSig sig_qi;
};

struct Msg {
    MsgType type = MsgType::NewView;
    int view = 0;
    int sender = 0;
    std::optional<QCert> qc;
    std::variant<std::monostate, PreparePayload, PrepareAckPayload, PreCommitPayload,
                 PreCommitAckPayload, CommitPayload>
        payload;
    PartialSig partial{};  // pi-partial carried by acks
};

enum class AdvKind {
    None,
    Crash,
    EquivocateLeader,
    NonhomologousLeader,
    WrongCodedResults,
    WrongIndicator,
    DelayMax,
};

/// Simulator-owned transaction feed. Drawing for an epoch returns the pool
/// contents materialized under the current layout; abandoned draws flow back.
struct TxSource {
    virtual ~TxSource() = default;
    virtual std::vector<RoutedTx> draw(int view, int epoch, const EpochParams& ep) = 0;
};

struct Recorder {
    virtual ~Recorder() = default;
    virtual void on_propose(int node, int view, int epoch, const Digest& header,
                            const AssembledBlock& block) = 0;
    virtual void on_agree_failure(int node, int view) = 0;
    virtual void on_homology_failure(int node, int view) = 0;
    virtual void on_prepare_ack(int node, int view) = 0;
    virtual void on_decode_failure(int node, int view) = 0;
    virtual void on_decide(int node, int view, int epoch, const Digest& header,
                           const std::vector<Symbol>& appended_blocks,
                           const std::vector<std::uint8_t>& indicator) = 0;
    virtual void on_view_timeout(int node, int view) = 0;
};

struct ProtocolParams {
    int N = 4, K = 2, Q = 2, f = 0;
    int lambda_len = 2;  // hash output elements
    int gamma = 2;       // fingerprint length
    EpochParams dims;    // B, C, Dsig, E; T is per-epoch
    double timeout_base = 4.0;
};

/// Immutable per-run context shared by all nodes.
class ConsensusContext {
  public:
    const Field* field = nullptr;
    ProtocolParams prm;
    const KeyRegistry* reg = nullptr;
    const CryptoSuite* suite = nullptr;
    LagrangeMatrix G;
    std::vector<int> schedule;  // leader rotation, 0-based ids
    ThresholdScheme pi, lambda, tau;
    Header genesis;
    Digest genesis_digest{};

    static ConsensusContext make(const Field& f, const ProtocolParams& prm, const KeyRegistry& reg,
                                 const CryptoSuite& suite, std::vector<int> schedule);

    int leader_of(int view) const { return schedule[(view - 1) % schedule.size()]; }
    QCert genesis_qc() const { return QCert{MsgType::Prepare, 0, genesis_digest, {}, true}; }
    bool qc_valid(const QCert& qc) const;

    const EvalPoints& points_for(int L) const;
    const ResultGenerators& gens_for(int L) const;

  private:
    mutable std::map<int, EvalPoints> points_cache_;
    mutable std::map<int, ResultGenerators> gens_cache_;
};

/// One replica (and, when scheduled, leader) of the coded consensus protocol.
/// The simulator delivers one event at a time; handlers return the messages
/// to send and the timer to (re)arm.
class Node {
  public:
    struct Send {
        int dst;  // -1 broadcasts to all other nodes
        Msg msg;
    };
    struct Actions {
        std::vector<Send> sends;
        bool restart_timer = false;
        double timer_delay = 0;
    };

    Node(const ConsensusContext& ctx, int id, Shard coded_shard, TxSource* txs, Recorder* rec,
         AdvKind adv, std::vector<int> byz_set);

    Actions on_init();
    Actions on_message(const Msg& m);
    Actions on_timeout(int view);

    int id() const { return id_; }
    int cur_view() const { return cur_view_; }
    int height() const { return static_cast<int>(chain_.size()); }
    int epochs_committed() const { return height(); }
    const std::vector<Digest>& chain() const { return chain_; }
    const Shard& shard() const { return shard_; }
    int locked_view() const { return locked_qc_.view; }

  private:
    struct PendingView {
        Header header;
        Digest hdigest{};
        EpochParams ep;
        int L = 0;
        std::vector<Symbol> h_blocks, v_blocks;
        std::vector<Symbol> u_row;
        std::optional<std::vector<Symbol>> filtered_v;
        std::vector<std::uint8_t> indicator;
        bool prepare_acked = false;
    };

    struct LeaderRound {
        bool proposed = false;
        int phase = 0;  // 0 collect new-views, 1 prepare acks, 2 pre-commit acks, 3 commit acks
        std::map<int, QCert> new_views;
        Header header;
        Digest hdigest{};
        int epoch = 0;
        std::vector<Symbol> coded_h, coded_v;  // N rows, flattened strips
        EpochParams ep;
        QCert justify;
        std::vector<int> quorum;
        QCert prepare_qc, precommit_qc;
        struct PrepAck {
            int sender;
            PrepareAckPayload payload;
            PartialSig partial;
        };
        std::vector<PrepAck> prepare_acks;
        std::set<int> prepare_ackers;
        std::vector<PartialIndicator> gw_partials;
        std::vector<PartialSig> pc_partials, qi_partials;
        std::set<int> pc_ackers;
        std::vector<PartialSig> c_partials;
        std::set<int> c_ackers;
    };

    bool is_byz() const { return adv_ != AdvKind::None; }
    bool leader_here(int view) const { return ctx_->leader_of(view) == id_; }
    EpochParams epoch_params() const;
    int epoch_L(const EpochParams& ep) const;
    Digest tip() const { return chain_.empty() ? ctx_->genesis_digest : chain_.back(); }
    bool extends_locked(const Header& h) const;
    void advance_view(int to_view, Actions& act, bool progress);

    void maybe_propose(Actions& act);
    void handle_new_view(const Msg& m, Actions& act);
    void handle_prepare(const Msg& m, Actions& act);
    void handle_prepare_ack(const Msg& m, Actions& act);
    void handle_precommit(const Msg& m, Actions& act);
    void handle_precommit_ack(const Msg& m, Actions& act);
    void handle_commit(const Msg& m, Actions& act);
    void handle_commit_ack(const Msg& m, Actions& act);
    void handle_decide(const Msg& m, Actions& act);

    const ConsensusContext* ctx_;
    int id_;
    Shard shard_;  // coded
    TxSource* txs_;
    Recorder* rec_;
    AdvKind adv_;
    std::vector<int> byz_;

    int cur_view_ = 1;
    QCert prepare_qc_;  // highest known, travels in new-view
    QCert locked_qc_;
    QCert tip_qc_;  // justifies proposals on the decided tip
    std::vector<Digest> chain_;
    std::map<int, PendingView> pending_;       // by view
    std::optional<LeaderRound> round_;         // for cur_view_ when leading
    std::map<int, std::map<int, QCert>> new_view_buf_;  // view -> sender -> qc
    int consecutive_failures_ = 0;
    std::set<int> voted_prepare_;  // views this node acked a proposal in
};

/// safeHeader: the proposal extends the locked header, or its justifying QC
/// has a higher view than the lock.
bool safe_header(const Header& header, const QCert& qc, const QCert& locked,
                 const std::vector<Digest>& chain, const Digest& genesis);

}  // namespace codedchain
