#include "codedchain/field.hpp"

#include <bit>
#include <stdexcept>

#include "codedchain/rng.hpp"

namespace codedchain {

namespace {

// Deterministic Miller-Rabin; bases {2,7,61} decide primality below 2^32.
bool is_prime_u64(std::uint64_t n) {
    if (n < 2) return false;
    for (std::uint64_t p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL})
        if (n % p == 0) return n == p;
    std::uint64_t d = n - 1;
    int r = 0;
    while ((d & 1) == 0) d >>= 1, ++r;
    auto mulmod = [n](std::uint64_t a, std::uint64_t b) { return (a * b) % n; };
    for (std::uint64_t a : {2ULL, 7ULL, 61ULL}) {
        std::uint64_t x = 1, base = a % n, e = d;
        while (e) {
            if (e & 1) x = mulmod(x, base);
            base = mulmod(base, base);
            e >>= 1;
        }
        if (x == 1 || x == n - 1) continue;
        bool composite = true;
        for (int i = 1; i < r; ++i) {
            x = mulmod(x, x);
            if (x == n - 1) {
                composite = false;
                break;
            }
        }
        if (composite) return false;
    }
    return true;
}

}  // namespace

Field::Field(fe q) : q_(q) {
    if (q < 2 || q > 0xffffffffULL)
        throw std::invalid_argument("field modulus must satisfy 2 <= q < 2^32");
    if (!is_prime_u64(q)) throw std::invalid_argument("field modulus must be prime");
    bits_ = 64 - std::countl_zero(q - 1);
    if (bits_ == 0) bits_ = 1;
}

fe Field::from_signed(std::int64_t v) const {
    std::int64_t m = v % static_cast<std::int64_t>(q_);
    if (m < 0) m += static_cast<std::int64_t>(q_);
    return static_cast<fe>(m);
}

fe Field::pow(fe a, std::uint64_t e) const {
    fe r = 1, base = a % q_;
    while (e) {
        if (e & 1) r = mul(r, base);
        base = mul(base, base);
        e >>= 1;
    }
    return r;
}

fe Field::inv(fe a) const {
    if (a % q_ == 0) throw std::domain_error("inverse of zero");
    // Extended Euclid; q is prime so gcd is 1.
    std::int64_t t = 0, new_t = 1;
    std::int64_t r = static_cast<std::int64_t>(q_), new_r = static_cast<std::int64_t>(a % q_);
    while (new_r != 0) {
        std::int64_t quot = r / new_r;
        t = std::exchange(new_t, t - quot * new_t);
        r = std::exchange(new_r, r - quot * new_r);
    }
    return from_signed(t);
}

Poly Poly::of(std::vector<fe> coeffs, const Field& f) {
    for (auto& c : coeffs) c %= f.q();
    while (!coeffs.empty() && coeffs.back() == 0) coeffs.pop_back();
    return Poly{std::move(coeffs)};
}

bool operator==(const Poly& a, const Poly& b) { return a.c == b.c; }

Poly poly_add(const Field& f, const Poly& a, const Poly& b) {
    std::vector<fe> out(std::max(a.c.size(), b.c.size()), 0);
    for (size_t i = 0; i < out.size(); ++i) {
        fe x = i < a.c.size() ? a.c[i] : 0;
        fe y = i < b.c.size() ? b.c[i] : 0;
        out[i] = f.add(x, y);
    }
    while (!out.empty() && out.back() == 0) out.pop_back();
    return Poly{std::move(out)};
}

Poly poly_sub(const Field& f, const Poly& a, const Poly& b) {
    std::vector<fe> out(std::max(a.c.size(), b.c.size()), 0);
    for (size_t i = 0; i < out.size(); ++i) {
        fe x = i < a.c.size() ? a.c[i] : 0;
        fe y = i < b.c.size() ? b.c[i] : 0;
        out[i] = f.sub(x, y);
    }
    while (!out.empty() && out.back() == 0) out.pop_back();
    return Poly{std::move(out)};
}

Poly poly_mul(const Field& f, const Poly& a, const Poly& b) {
    if (a.is_zero() || b.is_zero()) return Poly::zero();
    std::vector<fe> out(a.c.size() + b.c.size() - 1, 0);
    for (size_t i = 0; i < a.c.size(); ++i)
        for (size_t j = 0; j < b.c.size(); ++j)
            out[i + j] = f.add(out[i + j], f.mul(a.c[i], b.c[j]));
    return Poly{std::move(out)};
}

Poly poly_scale(const Field& f, const Poly& a, fe s) {
    if (s % f.q() == 0) return Poly::zero();
    Poly out = a;
    for (auto& c : out.c) c = f.mul(c, s);
    return out;
}

fe poly_eval(const Field& f, const Poly& a, fe x) {
    fe r = 0;
    for (auto it = a.c.rbegin(); it != a.c.rend(); ++it) r = f.add(f.mul(r, x), *it);
    return r;
}

std::pair<Poly, Poly> poly_divmod(const Field& f, const Poly& d, const Poly& m) {
    if (m.degree() < 1 || !m.monic(f))
        throw std::invalid_argument("modulus must be monic of degree >= 1");
    std::vector<fe> rem = d.c;
    int dm = m.degree();
    if (d.degree() < dm) return {Poly::zero(), d};
    std::vector<fe> quot(d.degree() - dm + 1, 0);
    for (int i = d.degree(); i >= dm; --i) {
        fe coef = rem[i];
        if (coef == 0) continue;
        quot[i - dm] = coef;
        for (int j = 0; j <= dm; ++j) rem[i - dm + j] = f.sub(rem[i - dm + j], f.mul(coef, m.c[j]));
    }
    while (!rem.empty() && rem.back() == 0) rem.pop_back();
    while (!quot.empty() && quot.back() == 0) quot.pop_back();
    return {Poly{std::move(quot)}, Poly{std::move(rem)}};
}

Poly poly_mod(const Field& f, const Poly& d, const Poly& m) { return poly_divmod(f, d, m).second; }

Poly poly_gcd(const Field& f, Poly a, Poly b) {
    while (!b.is_zero()) {
        // Normalize b to monic so poly_mod's precondition holds.
        Poly bm = poly_scale(f, b, f.inv(b.c.back()));
        Poly r = bm.degree() == 0 ? Poly::zero() : poly_mod(f, a, bm);
        a = std::move(bm);
        b = std::move(r);
    }
    if (!a.is_zero() && a.c.back() != 1) a = poly_scale(f, a, f.inv(a.c.back()));
    return a;
}

bool is_irreducible(const Field& f, const Poly& p) {
    int n = p.degree();
    if (n < 1 || !p.monic(f)) return false;
    if (n == 1) return true;
    Poly x = Poly{{0, 1}};
    // h_i = x^{q^i} mod p via iterated Frobenius.
    std::vector<Poly> frob(n + 1);
    frob[0] = x;
    for (int i = 1; i <= n; ++i) frob[i] = poly_pow_mod(f, frob[i - 1], f.q(), p);
    if (!(frob[n] == poly_mod(f, x, p))) return false;
    // For each prime divisor r of n, gcd(x^{q^{n/r}} - x, p) must be 1.
    int m = n;
    for (int r = 2; r * r <= m; ++r) {
        if (m % r) continue;
        while (m % r == 0) m /= r;
        Poly g = poly_gcd(f, poly_sub(f, frob[n / r], poly_mod(f, x, p)), p);
        if (g.degree() != 0) return false;
    }
    if (m > 1) {
        Poly g = poly_gcd(f, poly_sub(f, frob[n / m], poly_mod(f, x, p)), p);
        if (g.degree() != 0) return false;
    }
    return true;
}

Poly poly_pow_mod(const Field& f, Poly base, std::uint64_t e, const Poly& m) {
    Poly r{{1}};
    base = poly_mod(f, base, m);
    while (e) {
        if (e & 1) r = poly_mod(f, poly_mul(f, r, base), m);
        base = poly_mod(f, poly_mul(f, base, base), m);
        e >>= 1;
    }
    return r;
}

Poly find_irreducible(const Field& f, std::span<const std::uint8_t> seed, int gamma) {
    if (gamma < 1) throw std::invalid_argument("gamma must be >= 1");
    std::uint64_t s = 0x1db5a7f9c3e42b17ULL;
    for (auto b : seed) s = (s ^ b) * 0x100000001b3ULL;
    Rng rng(s);
    for (;;) {
        std::vector<fe> c(gamma + 1);
        for (int i = 0; i < gamma; ++i) c[i] = rng.below(f.q());
        c[gamma] = 1;
        Poly cand{std::move(c)};
        if (is_irreducible(f, cand)) return cand;
    }
}

}  // namespace codedchain
