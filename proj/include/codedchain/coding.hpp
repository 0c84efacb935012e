#pragma once

#include <map>
#include <optional>
#include <vector>

#include "codedchain/field.hpp"

namespace codedchain {

/// A symbol is a flat vector of field elements; coding operations apply
/// componentwise over symbols of uniform dimension.
using Symbol = std::vector<fe>;

/// Shard points omega (K), node points alpha (N), interpolation points beta (L).
/// The three sets are pairwise disjoint as one combined set.
struct EvalPoints {
    std::vector<fe> omega;
    std::vector<fe> alpha;
    std::vector<fe> beta;

    /// Canonical assignment: omega_k = k, alpha_i = K + i, beta_l = K + N + l.
    static EvalPoints make(const Field& f, int K, int N, int L);
    void validate(const Field& f) const;  // throws on repeats
};

/// K x N matrix with entries Phi_k(alpha_i), the Lagrange basis over omega
/// evaluated at the node points. Every column sums to one and every K x K
/// submatrix is invertible.
struct LagrangeMatrix {
    std::vector<std::vector<fe>> m;  // [K][N]
    int K() const { return static_cast<int>(m.size()); }
    int N() const { return m.empty() ? 0 : static_cast<int>(m[0].size()); }

    static LagrangeMatrix build(const Field& f, const EvalPoints& pts);
};

/// m * G for a length-K vector of symbols; output has length N.
std::vector<Symbol> encode_vector(const Field& f, const LagrangeMatrix& g,
                                  const std::vector<Symbol>& m);

/// G^T * M for a K-row matrix; row i of the output is the coded strip for
/// node i. Same arithmetic as encode_vector, spelled for row payloads.
std::vector<Symbol> encode_rows(const Field& f, const LagrangeMatrix& g,
                                const std::vector<Symbol>& rows);

/// Lagrange basis over beta evaluated at alpha (L x N) and omega (L x K).
struct ResultGenerators {
    std::vector<std::vector<fe>> at_alpha;
    std::vector<std::vector<fe>> at_omega;

    static ResultGenerators make(const Field& f, const EvalPoints& pts);
};

/// Reed-Solomon decoding of symbols received at a subset of the alpha
/// positions (0-based indices into alpha). Recovers the unique polynomial of
/// degree < L consistent with all but at most max_errors entries and returns
/// its values at beta_1..beta_L. Missing positions are erasures.
/// Returns nullopt when |received| < L + 2*max_errors or no codeword fits.
std::optional<std::vector<Symbol>> rs_decode(const Field& f,
                                             const std::map<int, Symbol>& received, int L,
                                             const EvalPoints& pts, int max_errors);

/// Maps decoded beta values to the K uncoded results: out[k] = sum_l
/// Psi_l(omega_k) * decoded[l].
std::vector<Symbol> result_to_uncoded(const Field& f, const std::vector<Symbol>& beta_values,
                                      const ResultGenerators& gen);

}  // namespace codedchain
