#include "codedchain/ledger.hpp"

#include <algorithm>
#include <stdexcept>

namespace codedchain {

int ceil_log2(std::uint64_t m) {
    if (m <= 1) return 0;
    int t = 0;
    std::uint64_t v = 1;
    while (v < m) {
        v <<= 1;
        ++t;
    }
    return t;
}

std::vector<fe> Transaction::serialize(const EpochParams& ep) const {
    if (static_cast<int>(u.size()) != ep.u_len() || static_cast<int>(p.size()) != ep.B ||
        static_cast<int>(a.size()) != ep.C || static_cast<int>(s.size()) != ep.Dsig)
        throw std::invalid_argument("transaction fields do not match epoch layout");
    std::vector<fe> out;
    out.reserve(ep.R());
    out.insert(out.end(), u.begin(), u.end());
    out.insert(out.end(), p.begin(), p.end());
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), s.begin(), s.end());
    return out;
}

Transaction Transaction::pad(const EpochParams& ep) {
    Transaction t;
    t.u.assign(ep.u_len(), 0);
    t.p.assign(ep.B, 0);
    t.a.assign(ep.C, 0);
    t.s.assign(ep.Dsig, 0);
    return t;
}

std::vector<fe> Transaction::lookup_rows(int T, std::uint64_t index) {
    std::vector<fe> u(2 * T, 0);
    for (int j = 0; j < T; ++j) {
        int bit = (index >> (T - 1 - j)) & 1;  // row j selects the j-th MSB
        u[2 * j + bit] = 1;
    }
    return u;
}

std::optional<std::uint64_t> Transaction::lookup_index(std::span<const fe> u, int T) {
    if (static_cast<int>(u.size()) != 2 * T) return std::nullopt;
    std::uint64_t idx = 0;
    for (int j = 0; j < T; ++j) {
        fe a = u[2 * j], b = u[2 * j + 1];
        if (a == 1 && b == 0)
            idx = idx << 1;
        else if (a == 0 && b == 1)
            idx = (idx << 1) | 1;
        else
            return std::nullopt;
    }
    return idx;
}

namespace {

Symbol flatten_block(const TinyBlock& tb) {
    Symbol out;
    for (const auto& row : tb.rows) out.insert(out.end(), row.begin(), row.end());
    return out;
}

}  // namespace

StripData Block::outgoing(int k) const {
    if (k < 1 || k > K) throw std::out_of_range("strip index");
    StripData s{StripData::Kind::Outgoing, k, {}};
    for (int r = 1; r <= K; ++r) s.blocks.push_back(flatten_block(grid[k - 1][r - 1]));
    return s;
}

StripData Block::incoming(int k) const {
    if (k < 1 || k > K) throw std::out_of_range("strip index");
    StripData s{StripData::Kind::Incoming, k, {}};
    for (int r = 1; r <= K; ++r) s.blocks.push_back(flatten_block(grid[r - 1][k - 1]));
    return s;
}

std::vector<Symbol> Block::as_rows() const {
    std::vector<Symbol> rows;
    for (int k = 1; k <= K; ++k) {
        Symbol flat;
        for (const auto& b : outgoing(k).blocks) flat.insert(flat.end(), b.begin(), b.end());
        rows.push_back(std::move(flat));
    }
    return rows;
}

std::vector<Symbol> Block::as_rows_transposed() const {
    std::vector<Symbol> rows;
    for (int k = 1; k <= K; ++k) {
        Symbol flat;
        for (const auto& b : incoming(k).blocks) flat.insert(flat.end(), b.begin(), b.end());
        rows.push_back(std::move(flat));
    }
    return rows;
}

AssembledBlock assemble_block(std::span<const RoutedTx> txs, int K, int Q, int epoch,
                              const EpochParams& ep) {
    if (K < 1 || Q < 1) throw std::invalid_argument("K and Q must be positive");
    AssembledBlock out;
    out.block.K = K;
    out.block.Q = Q;
    out.block.epoch = epoch;
    out.block.grid.assign(K, std::vector<TinyBlock>(K));
    out.ids.assign(K, std::vector<std::vector<std::uint64_t>>(K, std::vector<std::uint64_t>(Q, 0)));
    for (int k = 0; k < K; ++k)
        for (int r = 0; r < K; ++r) {
            auto& cell = out.block.grid[k][r];
            cell.sender = k + 1;
            cell.receiver = r + 1;
        }
    for (size_t i = 0; i < txs.size(); ++i) {
        const auto& t = txs[i];
        if (t.sender_comm < 1 || t.sender_comm > K || t.receiver_comm < 1 || t.receiver_comm > K)
            throw std::invalid_argument("transaction community labels out of range");
        auto& cell = out.block.grid[t.sender_comm - 1][t.receiver_comm - 1];
        if (static_cast<int>(cell.rows.size()) >= Q) {
            out.deferred.push_back(i);
            continue;
        }
        out.ids[t.sender_comm - 1][t.receiver_comm - 1][cell.rows.size()] = t.id;
        cell.rows.push_back(t.tx.serialize(ep));
        cell.pad_mask.push_back(0);
    }
    std::vector<fe> pad_row = Transaction::pad(ep).serialize(ep);
    for (auto& row : out.block.grid)
        for (auto& cell : row)
            while (static_cast<int>(cell.rows.size()) < Q) {
                cell.rows.push_back(pad_row);
                cell.pad_mask.push_back(1);
            }
    return out;
}

std::vector<fe> reembed_row(std::span<const fe> row, int t_from, int t_to, const EpochParams& ep) {
    if (t_to < t_from) throw std::invalid_argument("cannot shrink a transaction layout");
    if (t_to == t_from) return std::vector<fe>(row.begin(), row.end());
    std::vector<fe> out(2 * (t_to - t_from), 0);
    out.insert(out.end(), row.begin(), row.end());
    EpochParams check = ep;
    check.T = t_to;
    if (static_cast<int>(out.size()) != check.R())
        throw std::invalid_argument("row length does not match source layout");
    return out;
}

int Shard::t_exp() const { return std::max(1, ceil_log2(static_cast<std::uint64_t>(M))); }

void Shard::append(std::vector<std::vector<fe>> slots, int t_orig) {
    M += static_cast<int>(slots.size());
    if (!segments.empty() && segments.back().t_orig == t_orig) {
        auto& dst = segments.back().slots;
        dst.insert(dst.end(), std::make_move_iterator(slots.begin()),
                   std::make_move_iterator(slots.end()));
    } else {
        segments.push_back(Segment{t_orig, std::move(slots)});
    }
}

std::vector<Symbol> Shard::materialize(const EpochParams& ep) const {
    int T = ep.T;
    if (T < t_exp()) throw std::invalid_argument("tensor depth below shard occupancy");
    size_t slots_n = static_cast<size_t>(1) << T;
    std::vector<Symbol> out;
    out.reserve(slots_n);
    for (const auto& seg : segments)
        for (const auto& row : seg.slots) out.push_back(reembed_row(row, seg.t_orig, T, ep));
    Symbol zero(ep.R(), 0);
    while (out.size() < slots_n) out.push_back(zero);
    if (out.size() != slots_n) throw std::logic_error("shard occupancy exceeds tensor");
    return out;
}

}  // namespace codedchain
