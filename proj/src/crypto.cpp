#include "codedchain/crypto.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <algorithm>
#include <cstring>
#include <map>
#include <stdexcept>

namespace codedchain {

Digest sha256(std::span<const std::uint8_t> data) {
    Digest out{};
    unsigned len = 0;
    if (!EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) ||
        len != out.size())
        throw std::runtime_error("sha256 failed");
    return out;
}

Bytes serialize_fes(std::span<const fe> xs) {
    Bytes out;
    out.reserve(xs.size() * 8);
    for (fe x : xs)
        for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(x >> (8 * b)));
    return out;
}

std::vector<fe> hash_to_field(const Field& f, std::span<const std::uint8_t> data, int lambda) {
    std::vector<fe> out;
    out.reserve(lambda);
    Digest d = sha256(data);
    int counter = 0;
    while (static_cast<int>(out.size()) < lambda) {
        for (size_t off = 0; off + 8 <= d.size() && static_cast<int>(out.size()) < lambda; off += 8) {
            std::uint64_t v = 0;
            std::memcpy(&v, d.data() + off, 8);
            out.push_back(v % f.q());
        }
        if (static_cast<int>(out.size()) < lambda) {
            Bytes next(d.begin(), d.end());
            next.push_back(static_cast<std::uint8_t>(++counter));
            d = sha256(next);
        }
    }
    return out;
}

// --- node signatures ---------------------------------------------------------

struct KeyRegistry::Impl {
    std::vector<Bytes> secrets;                 // test-double HMAC keys
    std::vector<EVP_PKEY*> keys;                // Ed25519
    std::vector<Bytes> pubs;

    ~Impl() {
        for (auto* k : keys)
            if (k) EVP_PKEY_free(k);
    }
};

KeyRegistry::KeyRegistry(Mode mode, int n, std::uint64_t seed)
    : mode_(mode), n_(n), impl_(std::make_unique<Impl>()) {
    Rng rng(seed ^ 0x5167ab01dULL);
    if (mode_ == Mode::TestDouble) {
        for (int i = 0; i < n; ++i) {
            Bytes key(32);
            for (auto& b : key) b = static_cast<std::uint8_t>(rng.next());
            impl_->secrets.push_back(std::move(key));
        }
    } else {
        for (int i = 0; i < n; ++i) {
            Bytes seed_bytes(32);
            for (auto& b : seed_bytes) b = static_cast<std::uint8_t>(rng.next());
            EVP_PKEY* pk = EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr,
                                                        seed_bytes.data(), seed_bytes.size());
            if (!pk) throw std::runtime_error("ed25519 keygen failed");
            impl_->keys.push_back(pk);
        }
    }
}

KeyRegistry::~KeyRegistry() = default;
KeyRegistry::KeyRegistry(KeyRegistry&&) noexcept = default;
KeyRegistry& KeyRegistry::operator=(KeyRegistry&&) noexcept = default;

Bytes KeyRegistry::sign(int node, std::span<const std::uint8_t> msg) const {
    if (node < 0 || node >= n_) throw std::out_of_range("unknown node id");
    if (mode_ == Mode::TestDouble) {
        Bytes out(32);
        unsigned len = 32;
        const auto& key = impl_->secrets[node];
        if (!HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), msg.data(), msg.size(),
                  out.data(), &len))
            throw std::runtime_error("hmac failed");
        return out;
    }
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    Bytes out(64);
    size_t len = out.size();
    bool ok = ctx && EVP_DigestSignInit(ctx, nullptr, nullptr, nullptr, impl_->keys[node]) == 1 &&
              EVP_DigestSign(ctx, out.data(), &len, msg.data(), msg.size()) == 1;
    EVP_MD_CTX_free(ctx);
    if (!ok) throw std::runtime_error("ed25519 sign failed");
    out.resize(len);
    return out;
}

bool KeyRegistry::verify(int node, std::span<const std::uint8_t> msg,
                         std::span<const std::uint8_t> sig) const {
    if (node < 0 || node >= n_) return false;
    if (mode_ == Mode::TestDouble) {
        Bytes expect = sign(node, msg);
        return expect.size() == sig.size() &&
               std::equal(expect.begin(), expect.end(), sig.begin());
    }
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    bool ok = ctx && EVP_DigestVerifyInit(ctx, nullptr, nullptr, nullptr, impl_->keys[node]) == 1 &&
              EVP_DigestVerify(ctx, sig.data(), sig.size(), msg.data(), msg.size()) == 1;
    EVP_MD_CTX_free(ctx);
    return ok;
}

// --- threshold counting schemes ----------------------------------------------

namespace {

Bytes scheme_message(const ThresholdScheme& s, std::span<const std::uint8_t> msg) {
    Bytes m;
    m.reserve(s.id.size() + 1 + msg.size());
    m.insert(m.end(), s.id.begin(), s.id.end());
    m.push_back(0);
    m.insert(m.end(), msg.begin(), msg.end());
    return m;
}

}  // namespace

PartialSig tpartial(const KeyRegistry& reg, const ThresholdScheme& s, int node,
                    std::span<const std::uint8_t> msg) {
    return PartialSig{node, reg.sign(node, scheme_message(s, msg))};
}

std::optional<ThresholdSig> tcombine(const KeyRegistry& reg, const ThresholdScheme& s,
                                     std::span<const std::uint8_t> msg,
                                     std::span<const PartialSig> partials) {
    Bytes m = scheme_message(s, msg);
    std::map<int, Bytes> valid;  // distinct signers, first valid partial each
    for (const auto& p : partials) {
        if (p.signer < 0 || p.signer >= s.n) continue;
        if (valid.count(p.signer)) continue;
        if (reg.verify(p.signer, m, p.sig)) valid.emplace(p.signer, p.sig);
    }
    if (static_cast<int>(valid.size()) < s.t) return std::nullopt;
    ThresholdSig ts;
    for (auto& [signer, sig] : valid) {
        ts.signers.push_back(signer);
        ts.sigs.push_back(std::move(sig));
        if (static_cast<int>(ts.signers.size()) == s.t) break;
    }
    return ts;
}

bool tverify(const KeyRegistry& reg, const ThresholdScheme& s, std::span<const std::uint8_t> msg,
             const ThresholdSig& ts) {
    if (ts.signers.size() != ts.sigs.size()) return false;
    Bytes m = scheme_message(s, msg);
    std::vector<int> seen;
    for (size_t i = 0; i < ts.signers.size(); ++i) {
        int signer = ts.signers[i];
        if (signer < 0 || signer >= s.n) return false;
        if (std::find(seen.begin(), seen.end(), signer) != seen.end()) continue;
        if (!reg.verify(signer, m, ts.sigs[i])) return false;
        seen.push_back(signer);
    }
    return static_cast<int>(seen.size()) >= s.t;
}

// --- oil and vinegar ----------------------------------------------------------

namespace {

// Central-map coefficient layout per equation: quadratic (i <= j, oil-oil
// slots kept but forced to zero), then D linear, then constant.
int quad_index(int i, int j, int d) {
    // index of pair (i, j) with i <= j in row-major triangular order
    return i * d - i * (i - 1) / 2 + (j - i);
}

std::vector<std::vector<fe>> random_invertible(const Field& f, int d, Rng& rng,
                                               std::vector<std::vector<fe>>& inverse) {
    for (;;) {
        std::vector<std::vector<fe>> m(d, std::vector<fe>(d));
        for (auto& row : m)
            for (auto& x : row) x = rng.below(f.q());
        // Gauss-Jordan on [m | I]
        std::vector<std::vector<fe>> a = m;
        std::vector<std::vector<fe>> inv(d, std::vector<fe>(d, 0));
        for (int i = 0; i < d; ++i) inv[i][i] = 1;
        bool singular = false;
        for (int c = 0; c < d && !singular; ++c) {
            int piv = c;
            while (piv < d && a[piv][c] == 0) ++piv;
            if (piv == d) {
                singular = true;
                break;
            }
            std::swap(a[piv], a[c]);
            std::swap(inv[piv], inv[c]);
            fe s = f.inv(a[c][c]);
            for (int j = 0; j < d; ++j) {
                a[c][j] = f.mul(a[c][j], s);
                inv[c][j] = f.mul(inv[c][j], s);
            }
            for (int r = 0; r < d; ++r) {
                if (r == c || a[r][c] == 0) continue;
                fe factor = a[r][c];
                for (int j = 0; j < d; ++j) {
                    a[r][j] = f.sub(a[r][j], f.mul(factor, a[c][j]));
                    inv[r][j] = f.sub(inv[r][j], f.mul(factor, inv[c][j]));
                }
            }
        }
        if (singular) continue;
        inverse = std::move(inv);
        return m;
    }
}

}  // namespace

UovKeys uov_keygen(const Field& f, const UovParams& prm, std::uint64_t seed) {
    if (prm.oil < prm.E) throw std::invalid_argument("oil count must be at least E");
    Rng rng(seed ^ 0x0e11f1e1dULL);
    int d = prm.D();
    int nq = d * (d + 1) / 2;
    UovKeys keys;
    keys.prm = prm;

    // Central map: no oil-oil quadratic terms (oil variables come last).
    keys.central.assign(prm.E, std::vector<fe>(nq + d + 1, 0));
    for (int e = 0; e < prm.E; ++e) {
        auto& row = keys.central[e];
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) {
                bool oil_oil = i >= prm.vinegar && j >= prm.vinegar;
                if (!oil_oil) row[quad_index(i, j, d)] = rng.below(f.q());
            }
        for (int i = 0; i < d; ++i) row[nq + i] = rng.below(f.q());
        row[nq + d] = rng.below(f.q());
    }

    keys.s_mat = random_invertible(f, d, rng, keys.s_inv);

    // Compose the public system P(x) = Fc(S x).
    keys.pub.assign(prm.B(), 0);
    auto pub_quad = [&](int a, int b, int e) -> fe& {
        return keys.pub[static_cast<size_t>(quad_index(a, b, d)) * prm.E + e];
    };
    auto pub_lin = [&](int a, int e) -> fe& {
        return keys.pub[static_cast<size_t>(nq) * prm.E + static_cast<size_t>(a) * prm.E + e];
    };
    auto pub_const = [&](int e) -> fe& {
        return keys.pub[static_cast<size_t>(nq + d) * prm.E + e];
    };
    const auto& s = keys.s_mat;
    for (int e = 0; e < prm.E; ++e) {
        const auto& row = keys.central[e];
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) {
                fe coef = row[quad_index(i, j, d)];
                if (coef == 0) continue;
                for (int a = 0; a < d; ++a)
                    for (int b = 0; b < d; ++b) {
                        fe w = f.mul(coef, f.mul(s[i][a], s[j][b]));
                        if (w == 0) continue;
                        int lo = std::min(a, b), hi = std::max(a, b);
                        pub_quad(lo, hi, e) = f.add(pub_quad(lo, hi, e), w);
                    }
            }
        for (int i = 0; i < d; ++i) {
            fe coef = row[nq + i];
            if (coef == 0) continue;
            for (int a = 0; a < d; ++a) pub_lin(a, e) = f.add(pub_lin(a, e), f.mul(coef, s[i][a]));
        }
        pub_const(e) = f.add(pub_const(e), row[nq + d]);
    }
    return keys;
}

std::vector<fe> mq_eval(const Field& f, int D, int E, std::span<const fe> pub,
                        std::span<const fe> sig) {
    int nq = D * (D + 1) / 2;
    if (static_cast<int>(pub.size()) != E * (nq + D + 1))
        throw std::invalid_argument("bad public key size");
    if (static_cast<int>(sig.size()) != D) throw std::invalid_argument("bad signature size");
    std::vector<fe> out(E, 0);
    size_t idx = 0;
    for (int i = 0; i < D; ++i)
        for (int j = i; j < D; ++j) {
            fe m = f.mul(sig[i], sig[j]);
            for (int e = 0; e < E; ++e) out[e] = f.add(out[e], f.mul(pub[idx * E + e], m));
            ++idx;
        }
    for (int i = 0; i < D; ++i)
        for (int e = 0; e < E; ++e)
            out[e] = f.add(out[e], f.mul(pub[(nq + i) * E + e], sig[i]));
    for (int e = 0; e < E; ++e) out[e] = f.add(out[e], pub[(nq + D) * E + e]);
    return out;
}

std::vector<fe> mq_eval(const Field& f, const UovParams& prm, std::span<const fe> pub,
                        std::span<const fe> sig) {
    return mq_eval(f, prm.D(), prm.E, pub, sig);
}

std::optional<std::vector<fe>> uov_sign(const Field& f, const UovKeys& keys,
                                        std::span<const fe> digest, Rng& rng) {
    const auto& prm = keys.prm;
    int d = prm.D();
    int nq = d * (d + 1) / 2;
    if (static_cast<int>(digest.size()) != prm.E) throw std::invalid_argument("bad digest size");
    for (int attempt = 0; attempt < 64; ++attempt) {
        std::vector<fe> vin(prm.vinegar);
        for (auto& v : vin) v = rng.below(f.q());
        // Oil variables leave a linear system: E equations, `oil` unknowns.
        std::vector<std::vector<fe>> a(prm.E, std::vector<fe>(prm.oil, 0));
        std::vector<fe> b(prm.E, 0);
        for (int e = 0; e < prm.E; ++e) {
            const auto& row = keys.central[e];
            fe acc = row[nq + d];  // constant
            for (int i = 0; i < prm.vinegar; ++i) {
                for (int j = i; j < prm.vinegar; ++j)
                    acc = f.add(acc, f.mul(row[quad_index(i, j, d)], f.mul(vin[i], vin[j])));
                acc = f.add(acc, f.mul(row[nq + i], vin[i]));
            }
            for (int o = 0; o < prm.oil; ++o) {
                int jo = prm.vinegar + o;
                fe coef = row[nq + jo];
                for (int i = 0; i < prm.vinegar; ++i)
                    coef = f.add(coef, f.mul(row[quad_index(i, jo, d)], vin[i]));
                a[e][o] = coef;
            }
            b[e] = f.sub(digest[e], acc);
        }
        // Eliminate; resample vinegar when the system has no solution.
        int rank = 0;
        std::vector<int> pivots;
        for (int c = 0; c < prm.oil && rank < prm.E; ++c) {
            int piv = rank;
            while (piv < prm.E && a[piv][c] == 0) ++piv;
            if (piv == prm.E) continue;
            std::swap(a[piv], a[rank]);
            std::swap(b[piv], b[rank]);
            fe s = f.inv(a[rank][c]);
            for (int j = 0; j < prm.oil; ++j) a[rank][j] = f.mul(a[rank][j], s);
            b[rank] = f.mul(b[rank], s);
            for (int r = 0; r < prm.E; ++r) {
                if (r == rank || a[r][c] == 0) continue;
                fe factor = a[r][c];
                for (int j = 0; j < prm.oil; ++j) a[r][j] = f.sub(a[r][j], f.mul(factor, a[rank][j]));
                b[r] = f.sub(b[r], f.mul(factor, b[rank]));
            }
            pivots.push_back(c);
            ++rank;
        }
        bool inconsistent = false;
        for (int r = rank; r < prm.E; ++r)
            if (b[r] != 0) inconsistent = true;
        if (inconsistent || rank < prm.E) continue;
        std::vector<fe> oil(prm.oil, 0);
        for (int r = 0; r < rank; ++r) oil[pivots[r]] = b[r];
        std::vector<fe> y(vin);
        y.insert(y.end(), oil.begin(), oil.end());
        // sig = S^{-1} y
        std::vector<fe> sig(d, 0);
        for (int i = 0; i < d; ++i) {
            fe acc = 0;
            for (int j = 0; j < d; ++j) acc = f.add(acc, f.mul(keys.s_inv[i][j], y[j]));
            sig[i] = acc;
        }
        return sig;
    }
    return std::nullopt;
}

// --- hash polynomials ---------------------------------------------------------

HashPoly::HashPoly(const Field& f, std::uint64_t seed, int in_len, int out_len)
    : in_len_(in_len), out_len_(out_len) {
    if (in_len < 1 || out_len < 1) throw std::invalid_argument("bad hash dimensions");
    Rng rng(seed ^ (static_cast<std::uint64_t>(in_len) << 24) ^
            (static_cast<std::uint64_t>(out_len) << 48));
    terms_.resize(out_len);
    auto u = [&](int n) { return static_cast<std::uint32_t>(rng.below(n)); };
    int nq = 2 * in_len;
    int nc = 2 * in_len + 4;
    for (int c = 0; c < out_len; ++c) {
        auto& ts = terms_[c];
        // Dense linear part; constant term intentionally absent so the
        // all-zero input (a padding row) evaluates to zero.
        for (int i = 0; i < in_len; ++i)
            ts.push_back({static_cast<std::uint32_t>(i), kNone, kNone, rng.below(f.q())});
        for (int t = 0; t < nq; ++t) {
            std::uint32_t i = u(in_len), j = u(in_len);
            if (i > j) std::swap(i, j);
            ts.push_back({i, j, kNone, rng.below(f.q())});
        }
        for (int t = 0; t < nc; ++t) {
            std::uint32_t i = u(in_len), j = u(in_len), k = u(in_len);
            if (i > j) std::swap(i, j);
            if (j > k) std::swap(j, k);
            if (i > j) std::swap(i, j);
            fe coeff = t == 0 ? 1 + rng.below(f.q() - 1) : rng.below(f.q());
            ts.push_back({i, j, k, coeff});
        }
    }
}

std::vector<fe> HashPoly::eval(const Field& f, std::span<const fe> x) const {
    if (static_cast<int>(x.size()) != in_len_)
        throw std::invalid_argument("hash input length mismatch");
    std::vector<fe> out(out_len_, 0);
    for (int c = 0; c < out_len_; ++c) {
        fe acc = 0;
        for (const Term& t : terms_[c]) {
            fe v = f.mul(t.coeff, x[t.i]);
            if (t.j != kNone) v = f.mul(v, x[t.j]);
            if (t.k != kNone) v = f.mul(v, x[t.k]);
            acc = f.add(acc, v);
        }
        out[c] = acc;
    }
    return out;
}

// --- fingerprints and checksums ------------------------------------------------

std::vector<fe> fp(const Field& f, const Poly& r, std::span<const fe> data) {
    std::vector<fe> coeffs(data.begin(), data.end());
    Poly d = Poly::of(std::move(coeffs), f);
    Poly rem = poly_mod(f, d, r);
    std::vector<fe> out(r.degree(), 0);
    for (size_t i = 0; i < rem.c.size(); ++i) out[i] = rem.c[i];
    return out;
}

Poly select_key(const Field& f, const std::vector<std::vector<fe>>& cc, int gamma) {
    Bytes all;
    for (const auto& h : cc) {
        Bytes b = serialize_fes(h);
        all.insert(all.end(), b.begin(), b.end());
    }
    Digest d = sha256(all);
    return find_irreducible(f, std::span<const std::uint8_t>(d.data(), d.size()), gamma);
}

std::pair<Checksum, std::vector<Symbol>> make_checksum(const Field& f, const LagrangeMatrix& g,
                                                       const std::vector<Symbol>& rows, int lambda,
                                                       int gamma) {
    std::vector<Symbol> coded = encode_rows(f, g, rows);
    Checksum cks;
    cks.cc.reserve(coded.size());
    for (const auto& row : coded) cks.cc.push_back(hash_to_field(f, serialize_fes(row), lambda));
    Poly r = select_key(f, cks.cc, gamma);
    cks.fps.reserve(rows.size());
    for (const auto& row : rows) cks.fps.push_back(fp(f, r, row));
    return {std::move(cks), std::move(coded)};
}

bool agree(const Field& f, const LagrangeMatrix& g, const Checksum& cks,
           std::span<const fe> fragment, int i, int gamma) {
    if (i < 0 || i >= static_cast<int>(cks.cc.size())) return false;
    int lambda = static_cast<int>(cks.cc[i].size());
    if (hash_to_field(f, serialize_fes(fragment), lambda) != cks.cc[i]) return false;
    Poly r = select_key(f, cks.cc, gamma);
    std::vector<fe> have = fp(f, r, fragment);
    std::vector<Symbol> fp_syms(cks.fps.begin(), cks.fps.end());
    std::vector<Symbol> want = encode_vector(f, g, fp_syms);
    return have == want[i];
}

}  // namespace codedchain
