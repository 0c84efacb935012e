#include "codedchain/netsim.hpp"

#include <algorithm>
#include <bit>
#include <deque>
#include <memory>
#include <queue>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace codedchain {

using nlohmann::json;

// --- scenario -----------------------------------------------------------------

Scenario Scenario::from_json_text(const std::string& text) {
    json j = json::parse(text);
    Scenario s;
    s.N = j.value("N", s.N);
    s.K = j.value("K", s.K);
    s.Q = j.value("Q", s.Q);
    s.f = j.value("f", s.f);
    s.q = j.value("q", s.q);
    s.gamma = j.value("gamma", s.gamma);
    s.lambda = j.value("lambda", s.lambda);
    s.seed = j.value("seed", s.seed);
    s.epochs = j.value("epochs", s.epochs);
    s.gst = j.value("gst", s.gst);
    s.delta = j.value("delta", s.delta);
    s.pre_gst_cap = j.value("pre_gst_cap", s.pre_gst_cap);
    s.pre_gst_max = j.value("pre_gst_max", s.pre_gst_max);
    if (j.contains("leader_schedule")) {
        if (j["leader_schedule"].is_array())
            s.explicit_schedule = j["leader_schedule"].get<std::vector<int>>();
        else
            s.leader_schedule = j["leader_schedule"].get<std::string>();
    }
    if (j.contains("adversary") && j["adversary"].is_object()) {
        s.adversary = j["adversary"].value("strategy", std::string("none"));
        s.adversary_nodes = j["adversary"].value("nodes", std::vector<int>{});
    }
    s.crypto_mode = j.value("crypto_mode", s.crypto_mode);
    if (j.contains("uov")) {
        s.uov_oil = j["uov"].value("oil", s.uov_oil);
        s.uov_vinegar = j["uov"].value("vinegar", s.uov_vinegar);
        s.uov_E = j["uov"].value("E", s.uov_E);
    }
    s.C = j.value("C", s.C);
    s.genesis_per_shard = j.value("genesis_per_shard", s.genesis_per_shard);
    s.txs_per_epoch = j.value("txs_per_epoch", s.txs_per_epoch);
    if (j.contains("invalid_txs"))
        for (const auto& e : j["invalid_txs"])
            s.invalid_txs.emplace_back(e.value("epoch", 0), e.value("count", 0));
    s.timeout_base = j.value("timeout_base", s.timeout_base);
    s.max_views = j.value("max_views", s.max_views);
    return s;
}

std::string Scenario::to_json_text() const {
    json j;
    j["N"] = N;
    j["K"] = K;
    j["Q"] = Q;
    j["f"] = f;
    j["q"] = q;
    j["gamma"] = gamma;
    j["lambda"] = lambda;
    j["seed"] = seed;
    j["epochs"] = epochs;
    j["gst"] = gst;
    j["delta"] = delta;
    j["pre_gst_cap"] = pre_gst_cap;
    j["pre_gst_max"] = pre_gst_max;
    if (!explicit_schedule.empty())
        j["leader_schedule"] = explicit_schedule;
    else
        j["leader_schedule"] = leader_schedule;
    j["adversary"] = {{"strategy", adversary}, {"nodes", adversary_nodes}};
    j["crypto_mode"] = crypto_mode;
    j["uov"] = {{"oil", uov_oil}, {"vinegar", uov_vinegar}, {"E", uov_E}};
    j["C"] = C;
    j["genesis_per_shard"] = genesis_per_shard;
    j["txs_per_epoch"] = txs_per_epoch;
    json inv = json::array();
    for (auto& [e, c] : invalid_txs) inv.push_back({{"epoch", e}, {"count", c}});
    j["invalid_txs"] = inv;
    j["timeout_base"] = timeout_base;
    j["max_views"] = max_views;
    return j.dump(2);
}

EpochParams Scenario::dims() const {
    EpochParams ep;
    int D = uov_oil + uov_vinegar;
    ep.B = uov_E * (D * (D + 1) / 2 + D + 1);
    ep.C = C;
    ep.Dsig = D;
    ep.E = uov_E;
    ep.T = 1;
    return ep;
}

int Scenario::shard_size_before(int epoch) const {
    return genesis_count() + (epoch - 1) * K * Q;
}

int Scenario::degree_for_epoch(int epoch) const {
    int T = std::max(1, ceil_log2(static_cast<std::uint64_t>(shard_size_before(epoch))));
    return std::max(T + 1, 3);
}

int Scenario::max_degree() const {
    int d = 0;
    for (int t = 1; t <= epochs; ++t) d = std::max(d, degree_for_epoch(t));
    return d;
}

AdvKind Scenario::adv_kind() const {
    if (adversary == "none" || adversary_nodes.empty()) return AdvKind::None;
    if (adversary == "crash") return AdvKind::Crash;
    if (adversary == "equivocate-leader") return AdvKind::EquivocateLeader;
    if (adversary == "nonhomologous-leader") return AdvKind::NonhomologousLeader;
    if (adversary == "wrong-coded-results") return AdvKind::WrongCodedResults;
    if (adversary == "wrong-indicator-endorsement") return AdvKind::WrongIndicator;
    if (adversary == "delay-maximizer") return AdvKind::DelayMax;
    throw std::invalid_argument("unknown adversary strategy: " + adversary);
}

std::vector<int> Scenario::build_schedule() const {
    if (!explicit_schedule.empty()) {
        for (int v : explicit_schedule)
            if (v < 0 || v >= N) throw std::invalid_argument("schedule node out of range");
        return explicit_schedule;
    }
    std::set<int> byz(adversary_nodes.begin(), adversary_nodes.end());
    std::vector<int> sched;
    for (int i = 0; i < N; ++i) {
        if (leader_schedule == "round_robin_honest" && byz.count(i)) continue;
        sched.push_back(i);
    }
    if (sched.empty()) throw std::invalid_argument("leader schedule is empty");
    return sched;
}

void Scenario::validate() const {
    Field field(q);  // checks primality and size
    if (N < 1 || K < 1 || Q < 1 || f < 0 || epochs < 1)
        throw std::invalid_argument("N, K, Q, epochs must be positive and f nonnegative");
    if (3 * f >= N) throw std::invalid_argument("need f < N/3");
    if (K + 2 * f > N) throw std::invalid_argument("lambda scheme needs K + f <= N - f");
    for (int t = 1; t <= epochs; ++t) {
        int d = degree_for_epoch(t);
        if (N < (K - 1) * d + 3 * f + 1)
            throw std::invalid_argument("infeasible: N < (K-1)d + 3f + 1 at epoch " +
                                        std::to_string(t));
    }
    int L_max = (K - 1) * max_degree() + 1;
    if (static_cast<std::uint64_t>(N) + K + L_max >= q)
        throw std::invalid_argument("field too small for evaluation points");
    for (int v : adversary_nodes)
        if (v < 0 || v >= N) throw std::invalid_argument("adversary node out of range");
    if (static_cast<int>(adversary_nodes.size()) > f)
        throw std::invalid_argument("adversary controls more than f nodes");
    if (uov_oil < uov_E) throw std::invalid_argument("uov oil count below E");
    build_schedule();
}

// --- metering -----------------------------------------------------------------

namespace {

std::uint64_t field_bits(std::uint64_t q) {
    unsigned b = 64 - std::countl_zero(q - 1);
    return b == 0 ? 1 : b;
}

std::uint64_t checksum_bits(const Checksum& cks, std::uint64_t wq) {
    std::uint64_t bits = 0;
    for (const auto& h : cks.cc) bits += h.size() * wq;
    for (const auto& f : cks.fps) bits += f.size() * wq;
    return bits;
}

std::uint64_t symbols_bits(const std::vector<Symbol>& syms, std::uint64_t wq) {
    std::uint64_t bits = 0;
    for (const auto& s : syms) bits += s.size() * wq;
    return bits;
}

}  // namespace

std::uint64_t meter_msg(const Msg& m, const Scenario& s) {
    std::uint64_t wq = field_bits(s.q);
    std::uint64_t hash_bits = static_cast<std::uint64_t>(s.lambda) * wq;
    std::uint64_t qc_bits = m.qc ? (kSigBits + hash_bits + 40) : 0;
    std::uint64_t bits = kEnvelopeBits + qc_bits;
    switch (m.type) {
        case MsgType::NewView:
        case MsgType::Decide:
            break;
        case MsgType::Prepare: {
            const auto& pl = std::get<PreparePayload>(m.payload);
            bits += hash_bits + 32;  // prev pointer and height
            bits += checksum_bits(pl.header.cks_h, wq) + checksum_bits(pl.header.cks_v, wq);
            bits += symbols_bits(pl.h_blocks, wq) + symbols_bits(pl.v_blocks, wq);
            break;
        }
        case MsgType::PrepareAck: {
            const auto& pl = std::get<PrepareAckPayload>(m.payload);
            bits += pl.px.size() * kSigBits + pl.c_sigs.size() * kSigBits;
            bits += symbols_bits(pl.c_row, wq);
            bits += kSigBits;  // pi partial
            break;
        }
        case MsgType::PreCommit: {
            const auto& pl = std::get<PreCommitPayload>(m.payload);
            bits += s.N;  // quorum identifier bitmap
            bits += pl.px_col.size() * kSigBits + pl.c_sig_col.size() * kSigBits;
            bits += symbols_bits(pl.c_col, wq);
            break;
        }
        case MsgType::PreCommitAck: {
            const auto& pl = std::get<PreCommitAckPayload>(m.payload);
            bits += pl.gw.sigs.size() * kSigBits + pl.gw.bits.size();
            bits += 2 * kSigBits;  // pi partial and QI partial
            break;
        }
        case MsgType::Commit: {
            const auto& pl = std::get<CommitPayload>(m.payload);
            bits += s.N;
            bits += pl.gw.sigs.size() * kSigBits + pl.gw.bits.size();
            bits += kSigBits;  // combined QI signature
            break;
        }
        case MsgType::CommitAck:
            bits += kSigBits;
            break;
    }
    return bits;
}

// --- client world ---------------------------------------------------------------

namespace {

struct Client {
    int comm = 0;
    UovKeys keys;
    std::vector<fe> addr;
};

struct Intent {
    std::uint64_t id = 0;
    int shard = 0;
    std::uint64_t slot = 0;
    int sender = 0;    // client index
    int receiver = 0;  // client index
    int receiver_comm = 0;
    bool valid = true;
};

struct ClientWorld {
    const Field& field;
    const CryptoSuite& suite;
    const Scenario& sc;
    EpochParams dims;
    std::vector<Client> clients;
    std::vector<std::vector<int>> comm_clients;  // 1-based community
    struct Utxo {
        std::uint64_t slot;
        int owner;
    };
    std::vector<std::deque<Utxo>> unspent;  // per shard, FIFO
    std::vector<Intent> intents;
    std::vector<std::uint64_t> pool;  // intent ids, ascending
    std::vector<int> recv_rotation;
    int waves = 0;
    std::uint64_t submitted_real = 0;

    ClientWorld(const Field& f, const CryptoSuite& su, const Scenario& s)
        : field(f), suite(su), sc(s), dims(s.dims()) {
        int per_comm = std::max(2, std::min(8, s.genesis_count()));
        comm_clients.assign(s.K + 1, {});
        recv_rotation.assign(s.K + 1, 0);
        UovParams prm{s.uov_oil, s.uov_vinegar, s.uov_E};
        for (int k = 1; k <= s.K; ++k)
            for (int c = 0; c < per_comm; ++c) {
                Client cl;
                cl.comm = k;
                cl.keys = uov_keygen(f, prm, s.seed ^ (0xc11e57ULL + k * 131 + c));
                cl.addr = su.hash1().eval(f, cl.keys.pub);
                comm_clients[k].push_back(static_cast<int>(clients.size()));
                clients.push_back(std::move(cl));
            }
        unspent.assign(s.K + 1, {});
    }

    std::vector<Shard> build_genesis() {
        int count = sc.genesis_count();
        int T0 = std::max(1, ceil_log2(static_cast<std::uint64_t>(count)));
        EpochParams ep0 = dims;
        ep0.T = T0;
        std::vector<Shard> shards(sc.K + 1);
        for (int k = 1; k <= sc.K; ++k) {
            std::vector<std::vector<fe>> slots;
            for (int j = 0; j < count; ++j) {
                const Client& owner = clients[comm_clients[k][j % comm_clients[k].size()]];
                Transaction tx;
                tx.u = Transaction::lookup_rows(T0, j);
                tx.p = owner.keys.pub;
                tx.a = owner.addr;
                tx.s.assign(ep0.Dsig, 0);
                slots.push_back(tx.serialize(ep0));
                unspent[k].push_back(Utxo{static_cast<std::uint64_t>(j),
                                          comm_clients[k][j % comm_clients[k].size()]});
            }
            shards[k].community = k;
            shards[k].append(std::move(slots), T0);
        }
        return shards;
    }

    void ensure_wave(int epoch) {
        while (waves < epoch) {
            int target = waves + 1;
            int cap = sc.txs_per_epoch < 0 ? sc.Q * sc.K * sc.K : sc.txs_per_epoch;
            int made = 0;
            std::vector<std::uint64_t> wave;
            for (int k = 1; k <= sc.K && made < cap; ++k)
                for (int r = 1; r <= sc.K && made < cap; ++r)
                    for (int l = 0; l < sc.Q && made < cap; ++l) {
                        if (unspent[k].empty()) break;
                        Utxo ux = unspent[k].front();
                        unspent[k].pop_front();
                        Intent in;
                        in.id = intents.size() + 1;
                        in.shard = k;
                        in.slot = ux.slot;
                        in.sender = ux.owner;
                        const auto& rc = comm_clients[r];
                        in.receiver = rc[recv_rotation[r]++ % rc.size()];
                        in.receiver_comm = r;
                        intents.push_back(in);
                        wave.push_back(in.id);
                        ++made;
                    }
            int bad = 0;
            for (auto& [e, c] : sc.invalid_txs)
                if (e == target) bad += c;
            for (int i = 0; i < bad && i < static_cast<int>(wave.size()); ++i)
                intents[wave[i] - 1].valid = false;
            submitted_real += wave.size();
            pool.insert(pool.end(), wave.begin(), wave.end());
            std::sort(pool.begin(), pool.end());
            ++waves;
        }
    }

    RoutedTx materialize(std::uint64_t id, const EpochParams& ep) const {
        const Intent& in = intents[id - 1];
        const Client& sender = clients[in.sender];
        const Client& receiver = clients[in.receiver];
        Transaction tx;
        tx.u = Transaction::lookup_rows(ep.T, in.slot);
        tx.p = sender.keys.pub;
        tx.a = receiver.addr;
        std::vector<fe> upa;
        upa.insert(upa.end(), tx.u.begin(), tx.u.end());
        upa.insert(upa.end(), tx.p.begin(), tx.p.end());
        upa.insert(upa.end(), tx.a.begin(), tx.a.end());
        std::vector<fe> w = suite.hash2(ep.T).eval(field, upa);
        Rng rng(sc.seed ^ 0x51677e0ULL ^ (id * 0x9e3779b97f4a7c15ULL) ^ ep.T);
        auto sig = uov_sign(field, sender.keys, w, rng);
        if (!sig) throw std::runtime_error("uov signing failed");
        tx.s = std::move(*sig);
        if (!in.valid) tx.s[0] = field.add(tx.s[0], 1);
        return RoutedTx{clients[in.sender].comm, in.receiver_comm, std::move(tx), id, in.valid};
    }

    void return_to_pool(const std::vector<std::uint64_t>& ids) {
        pool.insert(pool.end(), ids.begin(), ids.end());
        std::sort(pool.begin(), pool.end());
        pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    }
};

// --- simulator ------------------------------------------------------------------

struct ProposalRec {
    int epoch = 0;
    int view = 0;
    int leader = -1;
    Block block;
    std::vector<std::vector<std::vector<std::uint64_t>>> ids;
    EpochParams ep;
};

struct EpochRec {
    bool seen = false;
    Digest digest{};
    int commit_view = 0;
    std::vector<std::uint8_t> g_star;
    std::vector<Symbol> expected_coded_v;  // N rows (flattened strips)
    EpochParams ep;
};

struct Event {
    double t = 0;
    std::uint64_t seq = 0;
    bool is_timer = false;
    int dst = 0;
    Msg msg;
    std::uint64_t timer_gen = 0;
};

struct EventCmp {
    bool operator()(const Event& a, const Event& b) const {
        return a.t != b.t ? a.t > b.t : a.seq > b.seq;
    }
};

class Sim final : public Recorder, public TxSource {
  public:
    explicit Sim(const Scenario& sc)
        : sc_(sc), field_(sc.q),
          reg_(sc.crypto_mode == "real" ? KeyRegistry::Mode::Ed25519
                                        : KeyRegistry::Mode::TestDouble,
               sc.N, sc.seed),
          suite_(field_, sc.seed ^ 0x5017eULL, sc.dims()),
          world_(field_, suite_, sc_),
          delay_rng_(sc.seed ^ 0xde1a9ULL) {
        ProtocolParams prm;
        prm.N = sc.N;
        prm.K = sc.K;
        prm.Q = sc.Q;
        prm.f = sc.f;
        prm.lambda_len = sc.lambda;
        prm.gamma = sc.gamma;
        prm.dims = sc.dims();
        prm.timeout_base = sc.timeout_base > 0 ? sc.timeout_base : 4 * sc.delta;
        ctx_ = ConsensusContext::make(field_, prm, reg_, suite_, sc.build_schedule());

        oracle_shards_ = world_.build_genesis();
        // Coded genesis shard per node: the same slots combined columnwise.
        AdvKind kind = sc.adv_kind();
        std::set<int> byz(sc.adversary_nodes.begin(), sc.adversary_nodes.end());
        for (int i = 0; i < sc.N; ++i) {
            Shard coded;
            coded.community = 0;
            std::vector<std::vector<fe>> slots;
            int count = oracle_shards_[1].M;
            int t0 = oracle_shards_[1].segments[0].t_orig;
            for (int j = 0; j < count; ++j) {
                std::vector<fe> acc(oracle_shards_[1].segments[0].slots[j].size(), 0);
                for (int k = 1; k <= sc.K; ++k) {
                    fe w = ctx_.G.m[k - 1][i];
                    const auto& src = oracle_shards_[k].segments[0].slots[j];
                    for (size_t c = 0; c < acc.size(); ++c)
                        acc[c] = field_.add(acc[c], field_.mul(w, src[c]));
                }
                slots.push_back(std::move(acc));
            }
            coded.append(std::move(slots), t0);
            AdvKind node_kind = byz.count(i) ? kind : AdvKind::None;
            nodes_.push_back(std::make_unique<Node>(ctx_, i, std::move(coded), this, this,
                                                    node_kind, sc.adversary_nodes));
            honest_.push_back(!byz.count(i));
        }
        timer_gen_.assign(sc.N, 0);
        max_views_ = sc.max_views > 0 ? sc.max_views : 30 * sc.epochs + 60;
    }

    RunResult run();

    // Recorder
    void on_propose(int node, int view, int epoch, const Digest& header,
                    const AssembledBlock& ab) override {
        auto& vs = view_stat(view);
        vs.leader = node;
        proposals_[header] = ProposalRec{epoch, view, node, ab.block, ab.ids, epoch_params_now()};
        if (!first_view_of_epoch_.count(epoch)) first_view_of_epoch_[epoch] = view;
        // Overflow went nowhere; put it back for the next epoch.
        if (!ab.deferred.empty() && outstanding_epoch_ == epoch) {
            std::vector<std::uint64_t> back;
            for (size_t idx : ab.deferred)
                if (idx < outstanding_ids_.size()) back.push_back(outstanding_ids_[idx]);
            world_.return_to_pool(back);
            std::vector<std::uint64_t> kept;
            std::set<std::uint64_t> gone(back.begin(), back.end());
            for (auto id : outstanding_ids_)
                if (!gone.count(id)) kept.push_back(id);
            outstanding_ids_ = std::move(kept);
        }
    }
    void on_agree_failure(int node, int view) override {
        if (honest_[node]) ++view_stat(view).agree_failures;
    }
    void on_homology_failure(int node, int view) override {
        if (honest_[node]) ++view_stat(view).homology_failures;
    }
    void on_prepare_ack(int node, int view) override {
        if (honest_[node]) ++view_stat(view).prepare_acks;
    }
    void on_decode_failure(int node, int view) override {
        if (honest_[node]) ++view_stat(view).decode_failures;
    }
    void on_view_timeout(int node, int view) override {
        if (honest_[node]) ++view_stat(view).timeouts;
    }
    void on_decide(int node, int view, int epoch, const Digest& header,
                   const std::vector<Symbol>& blocks, const std::vector<std::uint8_t>& g) override;

    // TxSource
    std::vector<RoutedTx> draw(int view, int epoch, const EpochParams& ep) override {
        if (outstanding_epoch_ == epoch && !outstanding_ids_.empty())
            world_.return_to_pool(outstanding_ids_);
        outstanding_ids_.clear();
        outstanding_epoch_ = epoch;
        world_.ensure_wave(epoch);
        std::vector<RoutedTx> out;
        out.reserve(world_.pool.size());
        for (auto id : world_.pool) {
            out.push_back(world_.materialize(id, ep));
            outstanding_ids_.push_back(id);
        }
        world_.pool.clear();
        return out;
    }

  private:
    EpochParams epoch_params_now() const {
        EpochParams ep = sc_.dims();
        ep.T = oracle_shards_[1].t_exp();
        return ep;
    }

    ViewStat& view_stat(int view) {
        auto it = views_.find(view);
        if (it == views_.end()) {
            it = views_.emplace(view, ViewStat{}).first;
            it->second.view = view;
            it->second.first_seen = now_;
            it->second.leader = ctx_.leader_of(view);
        }
        return it->second;
    }

    bool tx_valid_direct(std::span<const fe> row, const std::vector<Symbol>& tensor,
                         const EpochParams& ep) const {
        auto idx = Transaction::lookup_index(row.subspan(0, ep.u_len()), ep.T);
        if (!idx || *idx >= tensor.size()) return false;
        std::span<const fe> p = row.subspan(ep.u_len(), ep.B);
        std::span<const fe> a = row.subspan(ep.a_offset(), ep.C);
        std::span<const fe> s = row.subspan(ep.a_offset() + ep.C, ep.Dsig);
        const Symbol& parent = tensor[*idx];
        for (int c = 0; c < ep.C; ++c) {
            fe want = parent[ep.a_offset() + c];
            if (suite_.hash1().eval(field_, p)[c] != want) return false;
        }
        std::vector<fe> upa(row.begin(), row.begin() + ep.a_offset() + ep.C);
        std::vector<fe> h2 = suite_.hash2(ep.T).eval(field_, upa);
        std::vector<fe> mq = mq_eval(field_, ep.Dsig, ep.E, p, s);
        for (int e = 0; e < ep.E; ++e)
            if (mq[e] != h2[e]) return false;
        return true;
    }

    void schedule_send(int src, int dst, Msg msg);
    void process_actions(int src, Node::Actions&& act);
    double pick_delay(int src);

    Scenario sc_;
    Field field_;
    KeyRegistry reg_;
    CryptoSuite suite_;
    ClientWorld world_;
    ConsensusContext ctx_;
    std::vector<std::unique_ptr<Node>> nodes_;
    std::vector<bool> honest_;
    std::vector<Shard> oracle_shards_;  // uncoded ground truth, 1-based

    std::priority_queue<Event, std::vector<Event>, EventCmp> queue_;
    std::vector<std::uint64_t> timer_gen_;
    double now_ = 0;
    std::uint64_t seq_ = 0;
    Rng delay_rng_;
    int max_views_ = 0;

    std::map<Digest, ProposalRec> proposals_;
    std::map<int, EpochRec> epoch_recs_;
    std::map<int, int> first_view_of_epoch_;
    std::map<int, ViewStat> views_;
    std::vector<std::uint64_t> outstanding_ids_;
    int outstanding_epoch_ = -1;

    Metrics metrics_;
    RunReport report_;
    std::uint64_t bits_at_last_commit_ = 0;
    std::map<int, std::pair<std::uint64_t, std::uint64_t>> view_msgs_;  // view -> (phase, total)
};

double Sim::pick_delay(int src) {
    bool stretch = sc_.adv_kind() == AdvKind::DelayMax && !honest_[src];
    if (now_ < sc_.gst) {
        double pre = (sc_.pre_gst_max || stretch) ? sc_.pre_gst_cap
                                                  : delay_rng_.unit() * sc_.pre_gst_cap;
        double bound = sc_.gst + (stretch ? sc_.delta : sc_.delta * delay_rng_.unit());
        return std::min(now_ + pre, bound) - now_;
    }
    return stretch ? sc_.delta : sc_.delta * delay_rng_.unit();
}

void Sim::schedule_send(int src, int dst, Msg msg) {
    Event ev;
    ev.dst = dst;
    ev.seq = ++seq_;
    if (dst == src) {
        ev.t = now_;  // local delivery, not a network message
        ev.msg = std::move(msg);
        queue_.push(std::move(ev));
        return;
    }
    std::uint64_t bits = meter_msg(msg, sc_);
    const char* phase = msg_type_name(msg.type);
    auto& pm = metrics_.phases[phase];
    ++pm.msgs;
    pm.bits += bits;
    ++metrics_.total_msgs;
    metrics_.total_bits += bits;
    int attr_view = msg.type == MsgType::NewView ? msg.view + 1 : msg.view;
    auto& [phase_msgs, total_msgs] = view_msgs_[attr_view];
    ++total_msgs;
    if (msg.type != MsgType::NewView && msg.type != MsgType::Decide) ++phase_msgs;
    ++report_.sent_messages;
    ev.t = now_ + pick_delay(src);
    ev.msg = std::move(msg);
    queue_.push(std::move(ev));
}

void Sim::process_actions(int src, Node::Actions&& act) {
    for (auto& send : act.sends) {
        if (send.dst == -1) {
            for (int j = 0; j < sc_.N; ++j) schedule_send(src, j, send.msg);
        } else {
            schedule_send(src, send.dst, std::move(send.msg));
        }
    }
    if (act.restart_timer) {
        ++timer_gen_[src];
        Event ev;
        ev.t = now_ + act.timer_delay;
        ev.seq = ++seq_;
        ev.is_timer = true;
        ev.dst = src;
        ev.timer_gen = timer_gen_[src];
        queue_.push(std::move(ev));
    }
}

void Sim::on_decide(int node, int view, int epoch, const Digest& header,
                    const std::vector<Symbol>& blocks, const std::vector<std::uint8_t>& g) {
    if (!honest_[node]) return;
    auto& vs = view_stat(view);
    vs.committed = true;
    auto& er = epoch_recs_[epoch];
    if (!er.seen) {
        er.seen = true;
        er.digest = header;
        er.commit_view = view;
        auto pit = proposals_.find(header);
        if (pit == proposals_.end()) {
            report_.safety_violation = true;  // committed a header nobody proposed
            return;
        }
        const ProposalRec& prop = pit->second;
        er.ep = prop.ep;
        const Block& B = prop.block;

        // Brute-force uncoded verification of every transaction.
        std::vector<std::vector<Symbol>> tensors(sc_.K + 1);
        for (int k = 1; k <= sc_.K; ++k) tensors[k] = oracle_shards_[k].materialize(er.ep);
        er.g_star.assign(static_cast<size_t>(sc_.K) * sc_.Q, 0);
        for (int k = 1; k <= sc_.K; ++k)
            for (int r = 1; r <= sc_.K; ++r) {
                const TinyBlock& cell = B.grid[k - 1][r - 1];
                for (int l = 0; l < sc_.Q; ++l) {
                    if (cell.pad_mask[l]) continue;
                    if (!tx_valid_direct(cell.rows[l], tensors[k], er.ep))
                        er.g_star[static_cast<size_t>(k - 1) * sc_.Q + l] = 1;
                }
            }

        // Expected coded appends: encode the pad-filtered block transpose.
        Block filtered = B;
        for (int k = 1; k <= sc_.K; ++k)
            for (int l = 0; l < sc_.Q; ++l)
                if (er.g_star[static_cast<size_t>(k - 1) * sc_.Q + l])
                    for (int r = 1; r <= sc_.K; ++r)
                        std::fill(filtered.grid[k - 1][r - 1].rows[l].begin(),
                                  filtered.grid[k - 1][r - 1].rows[l].end(), 0);
        er.expected_coded_v = encode_rows(field_, ctx_.G, filtered.as_rows_transposed());

        // Confirmed set, collateral, and the next epoch's UTXOs.
        EpochReport rep;
        rep.epoch = epoch;
        rep.commit_view = view;
        auto fv = first_view_of_epoch_.find(epoch);
        rep.views_used = fv == first_view_of_epoch_.end() ? 1 : view - fv->second + 1;
        for (int r = 1; r <= sc_.K; ++r) {
            int m_before = oracle_shards_[r].M;
            std::vector<std::vector<fe>> slots;
            for (int k = 1; k <= sc_.K; ++k) {
                const TinyBlock& cell = filtered.grid[k - 1][r - 1];
                for (int l = 0; l < sc_.Q; ++l) {
                    slots.push_back(cell.rows[l]);
                    std::uint64_t id = prop.ids[k - 1][r - 1][l];
                    bool zeroed = er.g_star[static_cast<size_t>(k - 1) * sc_.Q + l];
                    if (id == 0) continue;
                    if (!zeroed) {
                        report_.confirmed_ids.push_back(id);
                        ++rep.confirmed;
                        std::uint64_t slot =
                            m_before + static_cast<std::uint64_t>(k - 1) * sc_.Q + l;
                        const Intent& in = world_.intents[id - 1];
                        world_.unspent[r].push_back(ClientWorld::Utxo{slot, in.receiver});
                    } else {
                        if (world_.intents[id - 1].valid) {
                            report_.collateral_ids.push_back(id);
                            ++rep.collateral;
                        }
                    }
                }
            }
            oracle_shards_[r].append(std::move(slots), er.ep.T);
        }
        rep.bits = metrics_.total_bits - bits_at_last_commit_;
        bits_at_last_commit_ = metrics_.total_bits;
        report_.epochs.push_back(rep);
        if (outstanding_epoch_ == epoch) {
            outstanding_ids_.clear();
            outstanding_epoch_ = -1;
        }
    } else if (er.digest != header) {
        report_.safety_violation = true;  // two honest commits diverge at one height
        return;
    }
    // Per-node checks: indicator and appended strip must match the oracle.
    auto& rep = report_.epochs;
    bool geq = g == er.g_star;
    Symbol flat;
    for (const auto& b : blocks) flat.insert(flat.end(), b.begin(), b.end());
    bool seq = flat == er.expected_coded_v[node];
    for (auto& r : rep)
        if (r.epoch == epoch) {
            r.oracle_equal = r.oracle_equal && geq;
            r.strips_match = r.strips_match && seq;
        }
}

RunResult Sim::run() {
    for (int i = 0; i < sc_.N; ++i) process_actions(i, nodes_[i]->on_init());
    auto done = [&] {
        for (int i = 0; i < sc_.N; ++i)
            if (honest_[i] && nodes_[i]->epochs_committed() < sc_.epochs) return false;
        return true;
    };
    bool finished = done();
    while (!queue_.empty() && !finished) {
        Event ev = queue_.top();
        queue_.pop();
        now_ = ev.t;
        if (ev.is_timer) {
            if (ev.timer_gen != timer_gen_[ev.dst]) continue;
            process_actions(ev.dst, nodes_[ev.dst]->on_timeout(nodes_[ev.dst]->cur_view()));
        } else {
            if (ev.msg.sender != ev.dst) ++report_.delivered_messages;
            process_actions(ev.dst, nodes_[ev.dst]->on_message(ev.msg));
        }
        view_stat(nodes_[ev.dst]->cur_view());
        finished = done();
        if (nodes_[ev.dst]->cur_view() > max_views_) break;
    }
    while (!queue_.empty()) {
        if (!queue_.top().is_timer && queue_.top().msg.sender != queue_.top().dst)
            ++report_.undelivered_at_stop;
        queue_.pop();
    }
    report_.all_epochs_committed = finished;
    int min_committed = sc_.epochs;
    for (int i = 0; i < sc_.N; ++i)
        if (honest_[i]) min_committed = std::min(min_committed, nodes_[i]->epochs_committed());
    report_.epochs_committed = min_committed;
    report_.submitted_real = world_.submitted_real;
    for (auto& [v, st] : views_) {
        auto it = view_msgs_.find(v);
        if (it != view_msgs_.end()) {
            st.phase_msgs = it->second.first;
            st.total_msgs = it->second.second;
            metrics_.max_view_phase_msgs = std::max(metrics_.max_view_phase_msgs, st.phase_msgs);
            metrics_.max_view_total_msgs = std::max(metrics_.max_view_total_msgs, st.total_msgs);
        }
        report_.views.push_back(st);
    }
    for (const auto& er : report_.epochs) {
        report_.oracle_all_equal = report_.oracle_all_equal && er.oracle_equal;
        report_.strips_all_match = report_.strips_all_match && er.strips_match;
    }
    RunResult out;
    out.metrics = std::move(metrics_);
    out.report = std::move(report_);
    return out;
}

}  // namespace

RunResult run_scenario(const Scenario& s) {
    s.validate();
    Sim sim(s);
    return sim.run();
}

std::string RunResult::to_json_lines(const Scenario& s) const {
    std::string out;
    for (const auto& e : report.epochs) {
        json j;
        j["schema"] = 1;
        j["type"] = "epoch";
        j["epoch"] = e.epoch;
        j["commit_view"] = e.commit_view;
        j["views_used"] = e.views_used;
        j["confirmed"] = e.confirmed;
        j["collateral"] = e.collateral;
        j["oracle_equal"] = e.oracle_equal;
        j["strips_match"] = e.strips_match;
        j["bits"] = e.bits;
        out += j.dump() + "\n";
    }
    json j;
    j["schema"] = 1;
    j["type"] = "summary";
    j["N"] = s.N;
    j["K"] = s.K;
    j["Q"] = s.Q;
    j["f"] = s.f;
    j["seed"] = s.seed;
    int rejected = 0;
    for (const auto& v : report.views)
        if (!v.committed && (v.agree_failures > 0 || v.homology_failures > 0)) ++rejected;
    j["attack_views_rejected"] = rejected;
    j["epochs_committed"] = report.epochs_committed;
    j["all_epochs_committed"] = report.all_epochs_committed;
    j["safety_violation"] = report.safety_violation;
    j["oracle_all_equal"] = report.oracle_all_equal;
    j["strips_all_match"] = report.strips_all_match;
    j["total_bits"] = metrics.total_bits;
    j["total_msgs"] = metrics.total_msgs;
    j["max_view_phase_msgs"] = metrics.max_view_phase_msgs;
    j["max_view_total_msgs"] = metrics.max_view_total_msgs;
    j["submitted"] = report.submitted_real;
    j["confirmed"] = report.confirmed_ids.size();
    j["collateral"] = report.collateral_ids.size();
    json phases = json::object();
    for (const auto& [name, pm] : metrics.phases)
        phases[name] = {{"msgs", pm.msgs}, {"bits", pm.bits}};
    j["phases"] = phases;
    out += j.dump() + "\n";
    return out;
}

}  // namespace codedchain
