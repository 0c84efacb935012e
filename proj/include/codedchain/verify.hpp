#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "codedchain/coding.hpp"
#include "codedchain/crypto.hpp"
#include "codedchain/ledger.hpp"

namespace codedchain {

/// Hash polynomials shared by all nodes. hash2's input length follows the
/// epoch (2T + B + C), so instances are cached per T.
class CryptoSuite {
  public:
    CryptoSuite(const Field& f, std::uint64_t seed, const EpochParams& dims);

    const HashPoly& hash1() const { return hash1_; }
    const HashPoly& hash2(int T) const;

  private:
    const Field& f_;
    std::uint64_t seed_;
    EpochParams dims_;
    HashPoly hash1_;
    mutable std::map<int, HashPoly> hash2_;
};

/// fetch(u, V): multilinear contraction of the shard tensor by the T lookup
/// rows. Total on any input; for one-hot rows it returns exactly the indexed
/// slot. The same code path serves coded and uncoded values.
std::vector<fe> fetch(const Field& f, std::span<const fe> u, const std::vector<Symbol>& tensor);

/// hash1(p) - a_old.
std::vector<fe> check_addr(const Field& f, const CryptoSuite& suite, std::span<const fe> p,
                           std::span<const fe> a_old);
/// MQ(p, s) - hash2(u || p || a).
std::vector<fe> check_sig(const Field& f, const CryptoSuite& suite, const EpochParams& ep,
                          std::span<const fe> row);
/// Concatenation of both checks against the fetched parent; length C+E,
/// all-zero iff the (uncoded) transaction passes.
std::vector<fe> verify_tx(const Field& f, const CryptoSuite& suite, const EpochParams& ep,
                          std::span<const fe> row, const std::vector<Symbol>& tensor);

/// K tiny result blocks of Q entries each, flattened per block to Q*(C+E).
struct ResultStrip {
    std::vector<Symbol> blocks;  // K x (Q*(C+E))
};

/// Elementwise verify_tx over the QK transaction slots of a strip-shaped
/// value against a shard-shaped value.
ResultStrip verify_strip(const Field& f, const CryptoSuite& suite, const EpochParams& ep, int Q,
                         const std::vector<Symbol>& strip_blocks,
                         const std::vector<Symbol>& tensor);

/// c_{i,*} = (e_i,1 .. e_i,K) * G_L: one Q*(C+E) symbol per node.
std::vector<Symbol> encode_results(const Field& f, const LagrangeMatrix& g,
                                   const ResultStrip& e_i);

/// RS-decodes a signature-filtered result column and maps it down to the K
/// uncoded combinations: the j-th coded incoming result strip R * (G_L)_j.
std::optional<std::vector<Symbol>> decode_result_column(const Field& f,
                                                        const std::map<int, Symbol>& received,
                                                        const EvalPoints& pts,
                                                        const ResultGenerators& gen,
                                                        int max_errors);

/// Zero test per (k, l) slot: entry 0 iff the (C+E)-vector at that slot of
/// the decoded strip is zero. Slot order: l runs fastest within block k.
std::vector<std::uint8_t> binary_results(const Field& f, const std::vector<Symbol>& s_j, int Q,
                                         int ce);

/// Per-slot endorsement: lambda-partial for 0, tau-partial for 1, bound to
/// (slot, bit, header).
struct PartialIndicator {
    std::vector<std::uint8_t> bits;
    std::vector<PartialSig> sigs;
};

Bytes indicator_message(std::uint32_t slot, int bit, const Digest& header);

PartialIndicator partial_indicator(const KeyRegistry& reg, const ThresholdScheme& lambda,
                                   const ThresholdScheme& tau, int node,
                                   std::span<const std::uint8_t> bits, const Digest& header);

/// One combined signature per slot: lambda on 0 when K+f partials endorse it,
/// else tau on 1 when f+1 partials do. Exactly one branch holds for
/// honest-majority inputs; nullopt when neither threshold is reached.
struct MergedIndicator {
    std::vector<std::uint8_t> bits;
    std::vector<ThresholdSig> sigs;
};

std::optional<MergedIndicator> merge_indicators(
    const KeyRegistry& reg, const ThresholdScheme& lambda, const ThresholdScheme& tau,
    const std::vector<PartialIndicator>& collected, const Digest& header, int slots);

/// Re-checks every combined signature against the header; nullopt on any
/// invalid entry.
std::optional<std::vector<std::uint8_t>> extract_indicator(const KeyRegistry& reg,
                                                           const ThresholdScheme& lambda,
                                                           const ThresholdScheme& tau,
                                                           const MergedIndicator& gw,
                                                           const Digest& header);

/// Zeroes the l-th transaction of the k-th coded tiny block for every slot
/// with bit 1.
std::vector<Symbol> apply_indicator(const std::vector<Symbol>& strip_blocks,
                                    std::span<const std::uint8_t> bits, int Q, int R);

}  // namespace codedchain
