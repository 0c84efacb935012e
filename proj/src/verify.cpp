#include "codedchain/verify.hpp"

#include <algorithm>
#include <stdexcept>

namespace codedchain {

CryptoSuite::CryptoSuite(const Field& f, std::uint64_t seed, const EpochParams& dims)
    : f_(f), seed_(seed), dims_(dims), hash1_(f, seed ^ 0x4a5871ULL, dims.B, dims.C) {}

const HashPoly& CryptoSuite::hash2(int T) const {
    auto it = hash2_.find(T);
    if (it == hash2_.end()) {
        int in_len = 2 * T + dims_.B + dims_.C;
        it = hash2_.emplace(T, HashPoly(f_, seed_ ^ 0x9b23cdULL, in_len, dims_.E)).first;
    }
    return it->second;
}

std::vector<fe> fetch(const Field& f, std::span<const fe> u, const std::vector<Symbol>& tensor) {
    size_t slots = tensor.size();
    int T = ceil_log2(slots);
    if (slots != (static_cast<size_t>(1) << T) || static_cast<int>(u.size()) != 2 * T)
        throw std::invalid_argument("fetch: lookup rows do not match tensor depth");
    size_t dim = tensor.empty() ? 0 : tensor[0].size();
    std::vector<Symbol> work = tensor;
    // Contract the most significant axis first: row j folds halves with
    // weights (u_{j,1}, u_{j,2}).
    for (int j = 0; j < T; ++j) {
        size_t half = work.size() / 2;
        fe w0 = u[2 * j], w1 = u[2 * j + 1];
        std::vector<Symbol> next(half, Symbol(dim, 0));
        for (size_t x = 0; x < half; ++x) {
            const auto& lo = work[x];
            const auto& hi = work[half + x];
            auto& dst = next[x];
            for (size_t c = 0; c < dim; ++c)
                dst[c] = f.add(f.mul(w0, lo[c]), f.mul(w1, hi[c]));
        }
        work = std::move(next);
    }
    return work[0];
}

std::vector<fe> check_addr(const Field& f, const CryptoSuite& suite, std::span<const fe> p,
                           std::span<const fe> a_old) {
    std::vector<fe> h = suite.hash1().eval(f, p);
    if (h.size() != a_old.size()) throw std::invalid_argument("address length mismatch");
    for (size_t i = 0; i < h.size(); ++i) h[i] = f.sub(h[i], a_old[i]);
    return h;
}

std::vector<fe> check_sig(const Field& f, const CryptoSuite& suite, const EpochParams& ep,
                          std::span<const fe> row) {
    if (static_cast<int>(row.size()) != ep.R())
        throw std::invalid_argument("transaction length mismatch");
    std::span<const fe> u = row.subspan(0, ep.u_len());
    std::span<const fe> p = row.subspan(ep.u_len(), ep.B);
    std::span<const fe> a = row.subspan(ep.a_offset(), ep.C);
    std::span<const fe> s = row.subspan(ep.a_offset() + ep.C, ep.Dsig);
    std::vector<fe> mq = mq_eval(f, ep.Dsig, ep.E, p, s);
    std::vector<fe> upa;
    upa.reserve(u.size() + p.size() + a.size());
    upa.insert(upa.end(), u.begin(), u.end());
    upa.insert(upa.end(), p.begin(), p.end());
    upa.insert(upa.end(), a.begin(), a.end());
    std::vector<fe> h = suite.hash2(ep.T).eval(f, upa);
    for (int e = 0; e < ep.E; ++e) mq[e] = f.sub(mq[e], h[e]);
    return mq;
}

std::vector<fe> verify_tx(const Field& f, const CryptoSuite& suite, const EpochParams& ep,
                          std::span<const fe> row, const std::vector<Symbol>& tensor) {
    if (static_cast<int>(row.size()) != ep.R())
        throw std::invalid_argument("transaction length mismatch");
    std::vector<fe> parent = fetch(f, row.subspan(0, ep.u_len()), tensor);
    std::span<const fe> a_old =
        std::span<const fe>(parent).subspan(ep.a_offset(), ep.C);
    std::span<const fe> p = row.subspan(ep.u_len(), ep.B);
    std::vector<fe> out = check_addr(f, suite, p, a_old);
    std::vector<fe> cs = check_sig(f, suite, ep, row);
    out.insert(out.end(), cs.begin(), cs.end());
    return out;
}

ResultStrip verify_strip(const Field& f, const CryptoSuite& suite, const EpochParams& ep, int Q,
                         const std::vector<Symbol>& strip_blocks,
                         const std::vector<Symbol>& tensor) {
    int R = ep.R();
    ResultStrip out;
    out.blocks.reserve(strip_blocks.size());
    for (const auto& block : strip_blocks) {
        if (static_cast<int>(block.size()) != Q * R)
            throw std::invalid_argument("tiny block shape mismatch");
        Symbol res;
        res.reserve(Q * (ep.C + ep.E));
        for (int l = 0; l < Q; ++l) {
            std::span<const fe> row(block.data() + static_cast<size_t>(l) * R, R);
            std::vector<fe> eta = verify_tx(f, suite, ep, row, tensor);
            res.insert(res.end(), eta.begin(), eta.end());
        }
        out.blocks.push_back(std::move(res));
    }
    return out;
}

std::vector<Symbol> encode_results(const Field& f, const LagrangeMatrix& g,
                                   const ResultStrip& e_i) {
    return encode_vector(f, g, e_i.blocks);
}

std::optional<std::vector<Symbol>> decode_result_column(const Field& f,
                                                        const std::map<int, Symbol>& received,
                                                        const EvalPoints& pts,
                                                        const ResultGenerators& gen,
                                                        int max_errors) {
    int L = static_cast<int>(pts.beta.size());
    auto beta_values = rs_decode(f, received, L, pts, max_errors);
    if (!beta_values) return std::nullopt;
    return result_to_uncoded(f, *beta_values, gen);
}

std::vector<std::uint8_t> binary_results(const Field& f, const std::vector<Symbol>& s_j, int Q,
                                         int ce) {
    (void)f;
    std::vector<std::uint8_t> bits;
    bits.reserve(s_j.size() * Q);
    for (const auto& block : s_j) {
        if (static_cast<int>(block.size()) != Q * ce)
            throw std::invalid_argument("result block shape mismatch");
        for (int l = 0; l < Q; ++l) {
            bool zero = true;
            for (int c = 0; c < ce; ++c)
                if (block[static_cast<size_t>(l) * ce + c] != 0) {
                    zero = false;
                    break;
                }
            bits.push_back(zero ? 0 : 1);
        }
    }
    return bits;
}

Bytes indicator_message(std::uint32_t slot, int bit, const Digest& header) {
    Bytes m;
    m.reserve(6 + header.size());
    for (int b = 0; b < 4; ++b) m.push_back(static_cast<std::uint8_t>(slot >> (8 * b)));
    m.push_back(static_cast<std::uint8_t>(bit));
    m.insert(m.end(), header.begin(), header.end());
    return m;
}

PartialIndicator partial_indicator(const KeyRegistry& reg, const ThresholdScheme& lambda,
                                   const ThresholdScheme& tau, int node,
                                   std::span<const std::uint8_t> bits, const Digest& header) {
    PartialIndicator out;
    out.bits.assign(bits.begin(), bits.end());
    out.sigs.reserve(bits.size());
    for (size_t l = 0; l < bits.size(); ++l) {
        const ThresholdScheme& s = bits[l] ? tau : lambda;
        out.sigs.push_back(
            tpartial(reg, s, node, indicator_message(static_cast<std::uint32_t>(l), bits[l], header)));
    }
    return out;
}

std::optional<MergedIndicator> merge_indicators(
    const KeyRegistry& reg, const ThresholdScheme& lambda, const ThresholdScheme& tau,
    const std::vector<PartialIndicator>& collected, const Digest& header, int slots) {
    MergedIndicator out;
    out.bits.resize(slots);
    out.sigs.resize(slots);
    for (int l = 0; l < slots; ++l) {
        std::vector<PartialSig> zeros, ones;
        for (const auto& pi : collected) {
            if (static_cast<int>(pi.bits.size()) != slots ||
                static_cast<int>(pi.sigs.size()) != slots)
                continue;
            (pi.bits[l] ? ones : zeros).push_back(pi.sigs[l]);
        }
        auto zero_sig = tcombine(reg, lambda, indicator_message(l, 0, header), zeros);
        if (zero_sig) {
            out.bits[l] = 0;
            out.sigs[l] = std::move(*zero_sig);
            continue;
        }
        auto one_sig = tcombine(reg, tau, indicator_message(l, 1, header), ones);
        if (!one_sig) return std::nullopt;  // fault budget exceeded
        out.bits[l] = 1;
        out.sigs[l] = std::move(*one_sig);
    }
    return out;
}

std::optional<std::vector<std::uint8_t>> extract_indicator(const KeyRegistry& reg,
                                                           const ThresholdScheme& lambda,
                                                           const ThresholdScheme& tau,
                                                           const MergedIndicator& gw,
                                                           const Digest& header) {
    if (gw.bits.size() != gw.sigs.size()) return std::nullopt;
    for (size_t l = 0; l < gw.bits.size(); ++l) {
        const ThresholdScheme& s = gw.bits[l] ? tau : lambda;
        if (!tverify(reg, s, indicator_message(static_cast<std::uint32_t>(l), gw.bits[l], header),
                     gw.sigs[l]))
            return std::nullopt;
    }
    return std::vector<std::uint8_t>(gw.bits.begin(), gw.bits.end());
}

std::vector<Symbol> apply_indicator(const std::vector<Symbol>& strip_blocks,
                                    std::span<const std::uint8_t> bits, int Q, int R) {
    std::vector<Symbol> out = strip_blocks;
    if (bits.size() != strip_blocks.size() * static_cast<size_t>(Q))
        throw std::invalid_argument("indicator length mismatch");
    for (size_t k = 0; k < out.size(); ++k) {
        if (static_cast<int>(out[k].size()) != Q * R)
            throw std::invalid_argument("tiny block shape mismatch");
        for (int l = 0; l < Q; ++l)
            if (bits[k * Q + l])
                std::fill_n(out[k].begin() + static_cast<size_t>(l) * R, R, 0);
    }
    return out;
}

}  // namespace codedchain
