#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "codedchain/coding.hpp"
#include "codedchain/field.hpp"
#include "codedchain/rng.hpp"

namespace codedchain {

using Bytes = std::vector<std::uint8_t>;
using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::span<const std::uint8_t> data);
Bytes serialize_fes(std::span<const fe> xs);  // little-endian u64 per element
std::vector<fe> hash_to_field(const Field& f, std::span<const std::uint8_t> data, int lambda);

/// Node PKI. The deterministic test double issues HMAC-SHA256 tags that only
/// the registry can verify; real mode uses Ed25519 keypairs. Both satisfy the
/// same contract and are chosen per scenario.
class KeyRegistry {
  public:
    enum class Mode { TestDouble, Ed25519 };

    KeyRegistry(Mode mode, int n, std::uint64_t seed);
    ~KeyRegistry();
    KeyRegistry(KeyRegistry&&) noexcept;
    KeyRegistry& operator=(KeyRegistry&&) noexcept;

    int size() const { return n_; }
    Bytes sign(int node, std::span<const std::uint8_t> msg) const;
    bool verify(int node, std::span<const std::uint8_t> msg, std::span<const std::uint8_t> sig) const;

  private:
    struct Impl;
    Mode mode_;
    int n_;
    std::unique_ptr<Impl> impl_;
};

/// Counting threshold scheme: a combined signature is a set of t partials
/// from distinct signers plus the signer set. pi has t = N - f, lambda has
/// t = K + f, tau has t = f + 1.
struct ThresholdScheme {
    std::string id;  // domain separation tag
    int t;
    int n;
};

struct PartialSig {
    int signer;
    Bytes sig;
};

struct ThresholdSig {
    std::vector<int> signers;  // sorted, distinct
    std::vector<Bytes> sigs;
    bool empty() const { return signers.empty(); }
};

PartialSig tpartial(const KeyRegistry& reg, const ThresholdScheme& s, int node,
                    std::span<const std::uint8_t> msg);
std::optional<ThresholdSig> tcombine(const KeyRegistry& reg, const ThresholdScheme& s,
                                     std::span<const std::uint8_t> msg,
                                     std::span<const PartialSig> partials);
bool tverify(const KeyRegistry& reg, const ThresholdScheme& s, std::span<const std::uint8_t> msg,
             const ThresholdSig& ts);

/// Oil-and-vinegar signature scheme over F_q. The public key packs the
/// quadratic system coefficients: for each pair i <= j a vector in F_q^E,
/// then D linear vectors, then the constant vector.
struct UovParams {
    int oil = 2;
    int vinegar = 4;
    int E = 2;

    int D() const { return oil + vinegar; }
    int B() const {
        int d = D();
        return E * (d * (d + 1) / 2 + d + 1);
    }
};

struct UovKeys {
    UovParams prm;
    std::vector<fe> pub;                   // length B
    std::vector<std::vector<fe>> central;  // E rows of central-map coefficients
    std::vector<std::vector<fe>> s_inv;    // D x D inverse of the variable mix
    std::vector<std::vector<fe>> s_mat;    // D x D variable mix
};

UovKeys uov_keygen(const Field& f, const UovParams& prm, std::uint64_t seed);
std::optional<std::vector<fe>> uov_sign(const Field& f, const UovKeys& keys,
                                        std::span<const fe> digest, Rng& rng);
/// Evaluates the packed quadratic system: degree 2 in sig, degree 1 in the
/// public coefficients. D and E fix the packing.
std::vector<fe> mq_eval(const Field& f, int D, int E, std::span<const fe> pub,
                        std::span<const fe> sig);
std::vector<fe> mq_eval(const Field& f, const UovParams& prm, std::span<const fe> pub,
                        std::span<const fe> sig);

/// Seeded public multivariate polynomial of total degree exactly 3 per output
/// coordinate, with zero constant term so the all-zero input maps to zero.
class HashPoly {
  public:
    HashPoly(const Field& f, std::uint64_t seed, int in_len, int out_len);

    std::vector<fe> eval(const Field& f, std::span<const fe> x) const;
    int in_len() const { return in_len_; }
    int out_len() const { return out_len_; }
    static constexpr int kDegree = 3;

  private:
    struct Term {
        std::uint32_t i, j, k;  // monomial indices; j,k may equal kNone
        fe coeff;
    };
    static constexpr std::uint32_t kNone = 0xffffffff;
    int in_len_, out_len_;
    std::vector<std::vector<Term>> terms_;  // per output coordinate
};

/// Division fingerprint: coefficients of data-as-polynomial mod r, padded to
/// gamma entries. Homomorphic in the data argument.
std::vector<fe> fp(const Field& f, const Poly& r, std::span<const fe> data);

struct Checksum {
    std::vector<std::vector<fe>> cc;   // N hashes, lambda elements each
    std::vector<std::vector<fe>> fps;  // K fingerprints, gamma elements each
};

/// Deterministic key selection: a cryptographic hash of the concatenated cc
/// list seeds the irreducible-polynomial search.
Poly select_key(const Field& f, const std::vector<std::vector<fe>>& cc, int gamma);

/// Encodes the K rows, hashes every coded row, selects the fingerprint key
/// from the hash list and fingerprints the uncoded rows. Returns the checksum
/// together with the coded rows for dispatch.
std::pair<Checksum, std::vector<Symbol>> make_checksum(const Field& f, const LagrangeMatrix& g,
                                                       const std::vector<Symbol>& rows, int lambda,
                                                       int gamma);

/// True iff the fragment hashes to cc[i] and its fingerprint matches the
/// Lagrange combination of the K uncoded fingerprints at position i.
bool agree(const Field& f, const LagrangeMatrix& g, const Checksum& cks,
           std::span<const fe> fragment, int i, int gamma);

}  // namespace codedchain
