#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "codedchain/coding.hpp"
#include "codedchain/crypto.hpp"
#include "codedchain/field.hpp"

namespace codedchain {

/// Per-epoch serialization parameters. Every transaction in an epoch is a
/// length-R vector: the T one-hot lookup rows, the public key, the receiver
/// address and the signature, in that order.
struct EpochParams {
    int T = 3;       // lookup rows; tensor depth of the shard being redeemed
    int B = 56;      // public key coefficients
    int C = 2;       // address length
    int Dsig = 6;    // signature length
    int E = 2;       // digest length

    int R() const { return 2 * T + B + C + Dsig; }
    int u_len() const { return 2 * T; }
    int a_offset() const { return 2 * T + B; }
    /// Verification degree: fetch is T+1, both hash polynomials and the
    /// quadratic check are degree 3.
    int degree() const { return std::max(T + 1, 3); }
};

/// One-coin, one-input/one-output transaction.
struct Transaction {
    std::vector<fe> u;  // 2T values, row-major (T rows of [u_{j,1}, u_{j,2}])
    std::vector<fe> p;  // B
    std::vector<fe> a;  // C
    std::vector<fe> s;  // Dsig

    std::vector<fe> serialize(const EpochParams& ep) const;
    static Transaction pad(const EpochParams& ep);  // the all-zero row

    /// One-hot lookup rows for a 0-based slot index; row j carries the j-th
    /// most significant bit.
    static std::vector<fe> lookup_rows(int T, std::uint64_t index);
    /// Inverse of lookup_rows; nullopt when any row is not one-hot.
    static std::optional<std::uint64_t> lookup_index(std::span<const fe> u, int T);
};

struct TinyBlock {
    int sender = 0;    // community k, 1-based
    int receiver = 0;  // community r, 1-based
    std::vector<std::vector<fe>> rows;  // Q x R
    std::vector<std::uint8_t> pad_mask; // Q; 1 marks a padding row
};

struct StripData {
    enum class Kind { Outgoing, Incoming };
    Kind kind;
    int index = 0;                 // community, 1-based
    std::vector<Symbol> blocks;    // K tiny blocks, each flattened Q*R
};

struct Block {
    int K = 0, Q = 0;
    int epoch = 0;
    std::vector<std::vector<TinyBlock>> grid;  // [K][K], grid[k][r]

    int total_slots() const { return K * K * Q; }
    StripData outgoing(int k) const;  // row k, 1-based
    StripData incoming(int k) const;  // transposed column k, 1-based
    /// K rows, row k = flattened outgoing strip k. The checksum/encode input.
    std::vector<Symbol> as_rows() const;
    std::vector<Symbol> as_rows_transposed() const;
};

/// A transaction routed to the grid, with simulator-side bookkeeping.
struct RoutedTx {
    int sender_comm = 0;
    int receiver_comm = 0;
    Transaction tx;
    std::uint64_t id = 0;
    bool intended_valid = true;
};

struct AssembledBlock {
    Block block;
    std::vector<size_t> deferred;               // indices into the input span
    std::vector<std::vector<std::vector<std::uint64_t>>> ids;  // [K][K][Q], 0 = pad
};

/// Routes transactions to grid cells by (sender, receiver) in arrival order.
/// Overflow beyond Q per cell is deferred, never dropped; underfull cells are
/// zero-padded and the pads marked.
AssembledBlock assemble_block(std::span<const RoutedTx> txs, int K, int Q, int epoch,
                              const EpochParams& ep);

/// Chain of incoming strips for one community, coded or uncoded. Slots from
/// older epochs were serialized under a smaller T; the tensor view re-embeds
/// them into the current layout by zero-filling the head of the u region.
struct Shard {
    struct Segment {
        int t_orig = 0;                  // T the slots were serialized under
        std::vector<std::vector<fe>> slots;
    };

    int community = 0;  // 1-based; 0 for coded shards (node-owned)
    int M = 0;          // occupied slots
    std::vector<Segment> segments;

    int t_exp() const;  // ceil(log2 M), at least 1
    void append(std::vector<std::vector<fe>> slots, int t_orig);

    /// Tensor view: 2^T slots of length R(T), zero-filled past M.
    std::vector<Symbol> materialize(const EpochParams& ep) const;
};

/// Re-serializes a row from layout t_from to t_to >= t_from.
std::vector<fe> reembed_row(std::span<const fe> row, int t_from, int t_to, const EpochParams& ep);

int ceil_log2(std::uint64_t m);

}  // namespace codedchain
