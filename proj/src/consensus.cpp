#include "codedchain/consensus.hpp"

#include <algorithm>
#include <stdexcept>

namespace codedchain {

const char* msg_type_name(MsgType t) {
    switch (t) {
        case MsgType::NewView: return "new_view";
        case MsgType::Prepare: return "prepare";
        case MsgType::PrepareAck: return "prepare_ack";
        case MsgType::PreCommit: return "precommit";
        case MsgType::PreCommitAck: return "precommit_ack";
        case MsgType::Commit: return "commit";
        case MsgType::CommitAck: return "commit_ack";
        case MsgType::Decide: return "decide";
    }
    return "?";
}

namespace {

void put_u32(Bytes& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_fes(Bytes& b, std::span<const fe> xs) {
    Bytes s = serialize_fes(xs);
    b.insert(b.end(), s.begin(), s.end());
}

std::vector<Symbol> split_blocks(const Symbol& row, int k) {
    if (k < 1 || row.size() % k != 0) throw std::invalid_argument("row not divisible into blocks");
    size_t blk = row.size() / k;
    std::vector<Symbol> out(k);
    for (int i = 0; i < k; ++i)
        out[i].assign(row.begin() + i * blk, row.begin() + (i + 1) * blk);
    return out;
}

Symbol join_blocks(const std::vector<Symbol>& blocks) {
    Symbol out;
    for (const auto& b : blocks) out.insert(out.end(), b.begin(), b.end());
    return out;
}

bool partial_valid(const KeyRegistry& reg, const ThresholdScheme& s,
                   std::span<const std::uint8_t> msg, const PartialSig& p) {
    return tcombine(reg, ThresholdScheme{s.id, 1, s.n}, msg, std::span(&p, 1)).has_value();
}

}  // namespace

Digest Header::digest() const {
    Bytes b;
    b.push_back('h');
    put_u32(b, static_cast<std::uint32_t>(height));
    b.insert(b.end(), prev.begin(), prev.end());
    for (const auto* cks : {&cks_h, &cks_v}) {
        for (const auto& h : cks->cc) put_fes(b, h);
        for (const auto& f : cks->fps) put_fes(b, f);
    }
    return sha256(b);
}

Bytes qc_message(MsgType type, int view, const Digest& header) {
    Bytes b{'q', 'c', static_cast<std::uint8_t>(type)};
    put_u32(b, static_cast<std::uint32_t>(view));
    b.insert(b.end(), header.begin(), header.end());
    return b;
}

Bytes w_message(int view, const Digest& header, int j, std::span<const fe> value) {
    Bytes b{'w'};
    put_u32(b, static_cast<std::uint32_t>(view));
    b.insert(b.end(), header.begin(), header.end());
    put_u32(b, static_cast<std::uint32_t>(j));
    put_fes(b, value);
    return b;
}

Bytes c_message(int view, const Digest& header, int j, std::span<const fe> value) {
    Bytes b{'c'};
    put_u32(b, static_cast<std::uint32_t>(view));
    b.insert(b.end(), header.begin(), header.end());
    put_u32(b, static_cast<std::uint32_t>(j));
    put_fes(b, value);
    return b;
}

std::vector<std::uint8_t> qi_bitmap(const std::vector<int>& members, int n) {
    std::vector<std::uint8_t> bm((n + 7) / 8, 0);
    for (int m : members) {
        if (m < 0 || m >= n) throw std::invalid_argument("quorum member out of range");
        bm[m / 8] |= static_cast<std::uint8_t>(1u << (m % 8));
    }
    return bm;
}

Bytes qi_message(int view, const std::vector<std::uint8_t>& bitmap) {
    Bytes b{'q', 'i'};
    put_u32(b, static_cast<std::uint32_t>(view));
    b.insert(b.end(), bitmap.begin(), bitmap.end());
    return b;
}

bool safe_header(const Header& header, const QCert& qc, const QCert& locked,
                 const std::vector<Digest>& chain, const Digest& genesis) {
    if (locked.genesis || locked.header == genesis) return true;
    if (locked.header == header.prev) return true;
    for (const auto& d : chain)
        if (d == locked.header) return true;  // locked header is a committed ancestor
    return qc.view > locked.view;
}

ConsensusContext ConsensusContext::make(const Field& f, const ProtocolParams& prm,
                                        const KeyRegistry& reg, const CryptoSuite& suite,
                                        std::vector<int> schedule) {
    ConsensusContext ctx;
    ctx.field = &f;
    ctx.prm = prm;
    ctx.reg = &reg;
    ctx.suite = &suite;
    ctx.schedule = std::move(schedule);
    if (ctx.schedule.empty()) throw std::invalid_argument("empty leader schedule");
    EvalPoints pts = EvalPoints::make(f, prm.K, prm.N, 1);
    ctx.G = LagrangeMatrix::build(f, pts);
    ctx.pi = ThresholdScheme{"pi", prm.N - prm.f, prm.N};
    ctx.lambda = ThresholdScheme{"lambda", prm.K + prm.f, prm.N};
    ctx.tau = ThresholdScheme{"tau", prm.f + 1, prm.N};
    ctx.genesis = Header{};
    ctx.genesis.height = 0;
    ctx.genesis_digest = ctx.genesis.digest();
    return ctx;
}

bool ConsensusContext::qc_valid(const QCert& qc) const {
    if (qc.genesis) return qc.view == 0 && qc.header == genesis_digest;
    return tverify(*reg, pi, qc_message(qc.type, qc.view, qc.header), qc.sig);
}

const EvalPoints& ConsensusContext::points_for(int L) const {
    auto it = points_cache_.find(L);
    if (it == points_cache_.end())
        it = points_cache_.emplace(L, EvalPoints::make(*field, prm.K, prm.N, L)).first;
    return it->second;
}

const ResultGenerators& ConsensusContext::gens_for(int L) const {
    auto it = gens_cache_.find(L);
    if (it == gens_cache_.end())
        it = gens_cache_.emplace(L, ResultGenerators::make(*field, points_for(L))).first;
    return it->second;
}

Node::Node(const ConsensusContext& ctx, int id, Shard coded_shard, TxSource* txs, Recorder* rec,
           AdvKind adv, std::vector<int> byz_set)
    : ctx_(&ctx), id_(id), shard_(std::move(coded_shard)), txs_(txs), rec_(rec), adv_(adv),
      byz_(std::move(byz_set)) {
    prepare_qc_ = ctx.genesis_qc();
    locked_qc_ = ctx.genesis_qc();
    tip_qc_ = ctx.genesis_qc();
}

EpochParams Node::epoch_params() const {
    EpochParams ep = ctx_->prm.dims;
    ep.T = shard_.t_exp();
    return ep;
}

int Node::epoch_L(const EpochParams& ep) const { return (ctx_->prm.K - 1) * ep.degree() + 1; }

bool Node::extends_locked(const Header& h) const {
    return safe_header(h, QCert{}, locked_qc_, chain_, ctx_->genesis_digest);
}

double current_timeout(double base, int failures) {
    int e = std::min(failures, 20);
    return base * static_cast<double>(1ULL << e);
}

void Node::advance_view(int to_view, Actions& act, bool progress) {
    if (to_view <= cur_view_) return;
    cur_view_ = to_view;
    round_.reset();
    if (progress)
        consecutive_failures_ = 0;
    else
        ++consecutive_failures_;
    for (auto it = pending_.begin(); it != pending_.end();)
        it = it->first < cur_view_ ? pending_.erase(it) : std::next(it);
    std::erase_if(new_view_buf_, [this](const auto& kv) { return kv.first < cur_view_; });
    std::erase_if(voted_prepare_, [this](int v) { return v < cur_view_; });
    Msg nv;
    nv.type = MsgType::NewView;
    nv.view = cur_view_ - 1;
    nv.sender = id_;
    nv.qc = prepare_qc_;
    act.sends.push_back({ctx_->leader_of(cur_view_), nv});
    act.restart_timer = true;
    act.timer_delay = current_timeout(ctx_->prm.timeout_base, consecutive_failures_);
}

Node::Actions Node::on_init() {
    Actions act;
    if (adv_ == AdvKind::Crash) return act;
    Msg nv;
    nv.type = MsgType::NewView;
    nv.view = 0;
    nv.sender = id_;
    nv.qc = prepare_qc_;
    act.sends.push_back({ctx_->leader_of(1), nv});
    act.restart_timer = true;
    act.timer_delay = current_timeout(ctx_->prm.timeout_base, 0);
    return act;
}

Node::Actions Node::on_timeout(int view) {
    Actions act;
    if (adv_ == AdvKind::Crash) return act;
    if (view != cur_view_) return act;
    if (rec_) rec_->on_view_timeout(id_, view);
    advance_view(cur_view_ + 1, act, false);
    maybe_propose(act);
    return act;
}

Node::Actions Node::on_message(const Msg& m) {
    Actions act;
    if (adv_ == AdvKind::Crash) return act;
    switch (m.type) {
        case MsgType::NewView: handle_new_view(m, act); break;
        case MsgType::Prepare: handle_prepare(m, act); break;
        case MsgType::PrepareAck: handle_prepare_ack(m, act); break;
        case MsgType::PreCommit: handle_precommit(m, act); break;
        case MsgType::PreCommitAck: handle_precommit_ack(m, act); break;
        case MsgType::Commit: handle_commit(m, act); break;
        case MsgType::CommitAck: handle_commit_ack(m, act); break;
        case MsgType::Decide: handle_decide(m, act); break;
    }
    return act;
}

void Node::handle_new_view(const Msg& m, Actions& act) {
    int for_view = m.view + 1;
    if (for_view < cur_view_ || !leader_here(for_view)) return;
    if (!m.qc || !ctx_->qc_valid(*m.qc)) return;
    if (m.qc->type != MsgType::Prepare && !m.qc->genesis) return;
    new_view_buf_[for_view].emplace(m.sender, *m.qc);
    maybe_propose(act);
}

void Node::maybe_propose(Actions& act) {
    if (!leader_here(cur_view_)) return;
    if (round_ && round_->proposed) return;
    auto it = new_view_buf_.find(cur_view_);
    int have = it == new_view_buf_.end() ? 0 : static_cast<int>(it->second.size());
    if (have < ctx_->prm.N - ctx_->prm.f) return;
    if (!round_) round_.emplace();

    LeaderRound& r = *round_;
    r.proposed = true;
    r.phase = 1;

    QCert high = ctx_->genesis_qc();
    for (const auto& [sender, qc] : it->second)
        if (qc.view > high.view) high = qc;
    r.justify = (high.header == tip()) ? high : tip_qc_;

    r.epoch = height() + 1;
    r.ep = epoch_params();
    std::vector<RoutedTx> drawn = txs_ ? txs_->draw(cur_view_, r.epoch, r.ep) : std::vector<RoutedTx>{};
    AssembledBlock assembled =
        assemble_block(drawn, ctx_->prm.K, ctx_->prm.Q, r.epoch, r.ep);

    const Field& f = *ctx_->field;
    std::vector<Symbol> rows_h = assembled.block.as_rows();
    std::vector<Symbol> rows_v = assembled.block.as_rows_transposed();

    // A second block for the leader attacks: one perturbed element suffices.
    std::optional<Block> alt;
    if (adv_ == AdvKind::EquivocateLeader || adv_ == AdvKind::NonhomologousLeader) {
        alt = assembled.block;
        auto& row = alt->grid[0][0].rows[0];
        row[r.ep.u_len()] = f.add(row[r.ep.u_len()], 1);
    }

    auto [cks_h, coded_h] = make_checksum(f, ctx_->G, rows_h, ctx_->prm.lambda_len, ctx_->prm.gamma);
    Checksum cks_v;
    std::vector<Symbol> coded_v;
    if (adv_ == AdvKind::NonhomologousLeader) {
        std::tie(cks_v, coded_v) = make_checksum(f, ctx_->G, alt->as_rows_transposed(),
                                                 ctx_->prm.lambda_len, ctx_->prm.gamma);
    } else {
        std::tie(cks_v, coded_v) = make_checksum(f, ctx_->G, rows_v, ctx_->prm.lambda_len,
                                                 ctx_->prm.gamma);
    }

    r.header = Header{tip(), r.epoch, std::move(cks_h), std::move(cks_v)};
    r.hdigest = r.header.digest();
    r.coded_h = coded_h;
    r.coded_v = coded_v;
    if (rec_) rec_->on_propose(id_, cur_view_, r.epoch, r.hdigest, assembled);

    std::vector<Symbol> equiv_h;
    if (adv_ == AdvKind::EquivocateLeader)
        equiv_h = encode_rows(f, ctx_->G, alt->as_rows());

    for (int i = 0; i < ctx_->prm.N; ++i) {
        Msg msg;
        msg.type = MsgType::Prepare;
        msg.view = cur_view_;
        msg.sender = id_;
        msg.qc = r.justify;
        bool buddy = std::find(byz_.begin(), byz_.end(), i) != byz_.end();
        const Symbol& h_row =
            (adv_ == AdvKind::EquivocateLeader && !buddy) ? equiv_h[i] : coded_h[i];
        msg.payload = PreparePayload{r.header, split_blocks(h_row, ctx_->prm.K),
                                     split_blocks(coded_v[i], ctx_->prm.K)};
        act.sends.push_back({i, std::move(msg)});
    }
    act.restart_timer = true;
    act.timer_delay = current_timeout(ctx_->prm.timeout_base, consecutive_failures_);
}

void Node::handle_prepare(const Msg& m, Actions& act) {
    if (m.view != cur_view_ || m.sender != ctx_->leader_of(m.view)) return;
    if (voted_prepare_.count(m.view)) return;
    const auto* pl = std::get_if<PreparePayload>(&m.payload);
    if (!pl || !m.qc) return;
    const Header& header = pl->header;
    Digest hdigest = header.digest();

    if (header.height != height() + 1 || header.prev != tip()) return;
    if (!ctx_->qc_valid(*m.qc)) return;
    if (header.prev != m.qc->header) return;  // must extend the justifying QC's header
    if (!safe_header(header, *m.qc, locked_qc_, chain_, ctx_->genesis_digest)) return;

    const Field& f = *ctx_->field;
    EpochParams ep = epoch_params();
    int K = ctx_->prm.K, Q = ctx_->prm.Q, N = ctx_->prm.N;
    size_t blk = static_cast<size_t>(Q) * ep.R();
    if (static_cast<int>(pl->h_blocks.size()) != K || static_cast<int>(pl->v_blocks.size()) != K)
        return;
    for (const auto* blocks : {&pl->h_blocks, &pl->v_blocks})
        for (const auto& b : *blocks)
            if (b.size() != blk) return;

    Symbol h_flat = join_blocks(pl->h_blocks);
    Symbol v_flat = join_blocks(pl->v_blocks);
    if (!agree(f, ctx_->G, header.cks_h, h_flat, id_, ctx_->prm.gamma) ||
        !agree(f, ctx_->G, header.cks_v, v_flat, id_, ctx_->prm.gamma)) {
        if (rec_) rec_->on_agree_failure(id_, m.view);
        return;
    }

    std::vector<Symbol> tensor = shard_.materialize(ep);
    ResultStrip e_i = verify_strip(f, *ctx_->suite, ep, Q, pl->h_blocks, tensor);

    std::vector<Symbol> w_row = encode_vector(f, ctx_->G, pl->h_blocks);
    std::vector<Symbol> u_row = encode_vector(f, ctx_->G, pl->v_blocks);
    std::vector<Symbol> c_row = encode_results(f, ctx_->G, e_i);
    if (adv_ == AdvKind::WrongCodedResults)
        for (auto& sym : c_row) sym[0] = f.add(sym[0], 1);

    PrepareAckPayload ack;
    ack.px.reserve(N);
    ack.c_sigs.reserve(N);
    for (int j = 0; j < N; ++j) {
        ack.px.push_back(ctx_->reg->sign(id_, w_message(m.view, hdigest, j, w_row[j])));
        ack.c_sigs.push_back(ctx_->reg->sign(id_, c_message(m.view, hdigest, j, c_row[j])));
    }
    ack.c_row = std::move(c_row);

    PendingView pv;
    pv.header = header;
    pv.hdigest = hdigest;
    pv.ep = ep;
    pv.L = epoch_L(ep);
    pv.h_blocks = pl->h_blocks;
    pv.v_blocks = pl->v_blocks;
    pv.u_row = std::move(u_row);
    pv.prepare_acked = true;
    pending_[m.view] = std::move(pv);
    voted_prepare_.insert(m.view);
    if (rec_) rec_->on_prepare_ack(id_, m.view);

    Msg out;
    out.type = MsgType::PrepareAck;
    out.view = m.view;
    out.sender = id_;
    out.payload = std::move(ack);
    out.partial = tpartial(*ctx_->reg, ctx_->pi, id_, qc_message(MsgType::Prepare, m.view, hdigest));
    act.sends.push_back({ctx_->leader_of(m.view), std::move(out)});
    act.restart_timer = true;
    act.timer_delay = current_timeout(ctx_->prm.timeout_base, consecutive_failures_);
}

void Node::handle_prepare_ack(const Msg& m, Actions& act) {
    if (m.view != cur_view_ || !round_ || round_->phase != 1) return;
    LeaderRound& r = *round_;
    const auto* pl = std::get_if<PrepareAckPayload>(&m.payload);
    if (!pl || r.prepare_ackers.count(m.sender)) return;
    int N = ctx_->prm.N;
    if (static_cast<int>(pl->px.size()) != N || static_cast<int>(pl->c_row.size()) != N ||
        static_cast<int>(pl->c_sigs.size()) != N)
        return;
    const Field& f = *ctx_->field;
    if (!partial_valid(*ctx_->reg, ctx_->pi, qc_message(MsgType::Prepare, m.view, r.hdigest),
                       m.partial))
        return;
    // The leader knows every coded strip it sent, so it can recompute the
    // expected w row and reject inconsistent signature vectors outright.
    std::vector<Symbol> w_row =
        encode_vector(f, ctx_->G, split_blocks(r.coded_h[m.sender], ctx_->prm.K));
    for (int j = 0; j < N; ++j) {
        if (!ctx_->reg->verify(m.sender, w_message(m.view, r.hdigest, j, w_row[j]), pl->px[j]))
            return;
        if (!ctx_->reg->verify(m.sender, c_message(m.view, r.hdigest, j, pl->c_row[j]),
                               pl->c_sigs[j]))
            return;
    }
    r.prepare_ackers.insert(m.sender);
    r.prepare_acks.push_back(LeaderRound::PrepAck{m.sender, *pl, m.partial});
    if (static_cast<int>(r.prepare_acks.size()) < ctx_->prm.N - ctx_->prm.f) return;

    std::vector<PartialSig> partials;
    for (const auto& a : r.prepare_acks) partials.push_back(a.partial);
    auto qc_sig = tcombine(*ctx_->reg, ctx_->pi, qc_message(MsgType::Prepare, m.view, r.hdigest),
                           partials);
    if (!qc_sig) return;
    r.prepare_qc = QCert{MsgType::Prepare, m.view, r.hdigest, std::move(*qc_sig), false};
    r.quorum.clear();
    for (const auto& a : r.prepare_acks) r.quorum.push_back(a.sender);
    std::sort(r.quorum.begin(), r.quorum.end());
    // Stable order of the stacked matrices follows the sorted quorum.
    std::sort(r.prepare_acks.begin(), r.prepare_acks.end(),
              [](const auto& a, const auto& b) { return a.sender < b.sender; });

    for (int j = 0; j < N; ++j) {
        PreCommitPayload pc;
        pc.quorum = r.quorum;
        for (const auto& a : r.prepare_acks) {
            pc.px_col.push_back(a.payload.px[j]);
            pc.c_col.push_back(a.payload.c_row[j]);
            pc.c_sig_col.push_back(a.payload.c_sigs[j]);
        }
        Msg out;
        out.type = MsgType::PreCommit;
        out.view = m.view;
        out.sender = id_;
        out.qc = r.prepare_qc;
        out.payload = std::move(pc);
        act.sends.push_back({j, std::move(out)});
    }
    r.phase = 2;
    act.restart_timer = true;
    act.timer_delay = current_timeout(ctx_->prm.timeout_base, consecutive_failures_);
}

void Node::handle_precommit(const Msg& m, Actions& act) {
    if (m.view != cur_view_ || m.sender != ctx_->leader_of(m.view)) return;
    auto pit = pending_.find(m.view);
    if (pit == pending_.end() || !pit->second.prepare_acked) return;
    PendingView& pv = pit->second;
    const auto* pl = std::get_if<PreCommitPayload>(&m.payload);
    if (!pl || !m.qc) return;
    if (m.qc->type != MsgType::Prepare || m.qc->view != m.view || m.qc->header != pv.hdigest)
        return;
    if (!ctx_->qc_valid(*m.qc)) return;
    if (m.qc->view > prepare_qc_.view) prepare_qc_ = *m.qc;

    int N = ctx_->prm.N, f_cnt = ctx_->prm.f, Q = ctx_->prm.Q;
    int quorum_size = N - f_cnt;
    if (static_cast<int>(pl->quorum.size()) != quorum_size ||
        static_cast<int>(pl->px_col.size()) != quorum_size ||
        static_cast<int>(pl->c_col.size()) != quorum_size ||
        static_cast<int>(pl->c_sig_col.size()) != quorum_size)
        return;
    if (!std::is_sorted(pl->quorum.begin(), pl->quorum.end())) return;

    const Field& f = *ctx_->field;
    // Homology: the received signature on (w_{i,j}, j) must verify against
    // this node's own u_{j,i}; equality w_{i,j} = u_{j,i} holds exactly when
    // both strips derive from one block.
    for (int idx = 0; idx < quorum_size; ++idx) {
        int i = pl->quorum[idx];
        if (i < 0 || i >= N) return;
        if (!ctx_->reg->verify(i, w_message(m.view, pv.hdigest, id_, pv.u_row[i]),
                               pl->px_col[idx])) {
            if (rec_) rec_->on_homology_failure(id_, m.view);
            return;
        }
    }

    std::map<int, Symbol> received;
    for (int idx = 0; idx < quorum_size; ++idx) {
        int i = pl->quorum[idx];
        if (ctx_->reg->verify(i, c_message(m.view, pv.hdigest, id_, pl->c_col[idx]),
                              pl->c_sig_col[idx]))
            received.emplace(i, pl->c_col[idx]);
    }
    auto s_j = decode_result_column(f, received, ctx_->points_for(pv.L), ctx_->gens_for(pv.L),
                                    f_cnt);
    if (!s_j) {
        if (rec_) rec_->on_decode_failure(id_, m.view);
        return;
    }
    std::vector<std::uint8_t> bits = binary_results(f, *s_j, Q, ctx_->prm.dims.C + ctx_->prm.dims.E);
    if (adv_ == AdvKind::WrongIndicator)
        for (auto& b : bits) b ^= 1;

    PreCommitAckPayload ack;
    ack.gw = partial_indicator(*ctx_->reg, ctx_->lambda, ctx_->tau, id_, bits, pv.hdigest);
    ack.partial_qi =
        tpartial(*ctx_->reg, ctx_->pi, id_, qi_message(m.view, qi_bitmap(pl->quorum, N)));

    Msg out;
    out.type = MsgType::PreCommitAck;
    out.view = m.view;
    out.sender = id_;
    out.payload = std::move(ack);
    out.partial =
        tpartial(*ctx_->reg, ctx_->pi, id_, qc_message(MsgType::PreCommit, m.view, pv.hdigest));
    act.sends.push_back({ctx_->leader_of(m.view), std::move(out)});
    act.restart_timer = true;
    act.timer_delay = current_timeout(ctx_->prm.timeout_base, consecutive_failures_);
}

void Node::handle_precommit_ack(const Msg& m, Actions& act) {
    if (m.view != cur_view_ || !round_ || round_->phase != 2) return;
    LeaderRound& r = *round_;
    const auto* pl = std::get_if<PreCommitAckPayload>(&m.payload);
    if (!pl || r.pc_ackers.count(m.sender)) return;
    if (!partial_valid(*ctx_->reg, ctx_->pi, qc_message(MsgType::PreCommit, m.view, r.hdigest),
                       m.partial))
        return;
    Bytes qi_msg = qi_message(m.view, qi_bitmap(r.quorum, ctx_->prm.N));
    if (pl->partial_qi.signer != m.sender ||
        !partial_valid(*ctx_->reg, ctx_->pi, qi_msg, pl->partial_qi))
        return;
    int slots = ctx_->prm.Q * ctx_->prm.K;
    if (static_cast<int>(pl->gw.bits.size()) != slots ||
        static_cast<int>(pl->gw.sigs.size()) != slots)
        return;
    r.pc_ackers.insert(m.sender);
    r.gw_partials.push_back(pl->gw);
    r.pc_partials.push_back(m.partial);
    r.qi_partials.push_back(pl->partial_qi);
    if (static_cast<int>(r.pc_ackers.size()) < ctx_->prm.N - ctx_->prm.f) return;

    auto qc_sig = tcombine(*ctx_->reg, ctx_->pi, qc_message(MsgType::PreCommit, m.view, r.hdigest),
                           r.pc_partials);
    if (!qc_sig) return;
    r.precommit_qc = QCert{MsgType::PreCommit, m.view, r.hdigest, std::move(*qc_sig), false};
    auto merged = merge_indicators(*ctx_->reg, ctx_->lambda, ctx_->tau, r.gw_partials, r.hdigest,
                                   slots);
    if (!merged) return;  // fault budget exceeded; view is abandoned
    auto sig_qi = tcombine(*ctx_->reg, ctx_->pi, qi_msg, r.qi_partials);
    if (!sig_qi) return;

    CommitPayload cp;
    cp.quorum = r.quorum;
    cp.gw = std::move(*merged);
    cp.sig_qi = std::move(*sig_qi);
    Msg out;
    out.type = MsgType::Commit;
    out.view = m.view;
    out.sender = id_;
    out.qc = r.precommit_qc;
    out.payload = std::move(cp);
    for (int j = 0; j < ctx_->prm.N; ++j) act.sends.push_back({j, out});
    r.phase = 3;
    act.restart_timer = true;
    act.timer_delay = current_timeout(ctx_->prm.timeout_base, consecutive_failures_);
}

void Node::handle_commit(const Msg& m, Actions& act) {
    if (m.view != cur_view_ || m.sender != ctx_->leader_of(m.view)) return;
    auto pit = pending_.find(m.view);
    if (pit == pending_.end()) return;
    PendingView& pv = pit->second;
    const auto* pl = std::get_if<CommitPayload>(&m.payload);
    if (!pl || !m.qc) return;
    if (m.qc->type != MsgType::PreCommit || m.qc->view != m.view || m.qc->header != pv.hdigest)
        return;
    if (!ctx_->qc_valid(*m.qc)) return;
    if (static_cast<int>(pl->quorum.size()) != ctx_->prm.N - ctx_->prm.f) return;
    Bytes qi_msg = qi_message(m.view, qi_bitmap(pl->quorum, ctx_->prm.N));
    if (!tverify(*ctx_->reg, ctx_->pi, qi_msg, pl->sig_qi)) return;
    auto g = extract_indicator(*ctx_->reg, ctx_->lambda, ctx_->tau, pl->gw, pv.hdigest);
    if (!g) return;

    locked_qc_ = *m.qc;
    pv.indicator = *g;
    pv.filtered_v = apply_indicator(pv.v_blocks, *g, ctx_->prm.Q, pv.ep.R());

    Msg out;
    out.type = MsgType::CommitAck;
    out.view = m.view;
    out.sender = id_;
    out.partial =
        tpartial(*ctx_->reg, ctx_->pi, id_, qc_message(MsgType::Commit, m.view, pv.hdigest));
    act.sends.push_back({ctx_->leader_of(m.view), std::move(out)});
    act.restart_timer = true;
    act.timer_delay = current_timeout(ctx_->prm.timeout_base, consecutive_failures_);
}

void Node::handle_commit_ack(const Msg& m, Actions& act) {
    if (m.view != cur_view_ || !round_ || round_->phase != 3) return;
    LeaderRound& r = *round_;
    if (r.c_ackers.count(m.sender)) return;
    if (!partial_valid(*ctx_->reg, ctx_->pi, qc_message(MsgType::Commit, m.view, r.hdigest),
                       m.partial))
        return;
    r.c_ackers.insert(m.sender);
    r.c_partials.push_back(m.partial);
    if (static_cast<int>(r.c_ackers.size()) < ctx_->prm.N - ctx_->prm.f) return;
    auto qc_sig =
        tcombine(*ctx_->reg, ctx_->pi, qc_message(MsgType::Commit, m.view, r.hdigest), r.c_partials);
    if (!qc_sig) return;
    QCert commit_qc{MsgType::Commit, m.view, r.hdigest, std::move(*qc_sig), false};
    Msg out;
    out.type = MsgType::Decide;
    out.view = m.view;
    out.sender = id_;
    out.qc = commit_qc;
    for (int j = 0; j < ctx_->prm.N; ++j) act.sends.push_back({j, out});
    r.phase = 4;
}

void Node::handle_decide(const Msg& m, Actions& act) {
    if (m.view != cur_view_ || m.sender != ctx_->leader_of(m.view)) return;
    if (!m.qc || m.qc->type != MsgType::Commit || m.qc->view != m.view) return;
    if (!ctx_->qc_valid(*m.qc)) return;
    auto pit = pending_.find(m.view);
    if (pit != pending_.end() && pit->second.filtered_v && pit->second.hdigest == m.qc->header) {
        PendingView& pv = pit->second;
        std::vector<std::vector<fe>> slots;
        slots.reserve(static_cast<size_t>(ctx_->prm.K) * ctx_->prm.Q);
        for (const auto& block : *pv.filtered_v)
            for (int l = 0; l < ctx_->prm.Q; ++l)
                slots.emplace_back(block.begin() + static_cast<size_t>(l) * pv.ep.R(),
                                   block.begin() + static_cast<size_t>(l + 1) * pv.ep.R());
        shard_.append(std::move(slots), pv.ep.T);
        chain_.push_back(pv.hdigest);
        tip_qc_ = *m.qc;
        if (rec_)
            rec_->on_decide(id_, m.view, pv.header.height, pv.hdigest, *pv.filtered_v,
                            pv.indicator);
    }
    advance_view(m.view + 1, act, true);
    maybe_propose(act);
}

}  // namespace codedchain
