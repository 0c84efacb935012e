#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace codedchain {

/// Canonical residue in [0, q). All arithmetic goes through a Field context.
using fe = std::uint64_t;

/// Prime-field context for a runtime-configured modulus q < 2^32.
/// Operations are pure and safe for concurrent use.
class Field {
  public:
    explicit Field(fe q);

    fe q() const { return q_; }
    unsigned bits() const { return bits_; }  // ceil(log2 q)

    fe reduce(std::uint64_t v) const { return v % q_; }
    fe from_signed(std::int64_t v) const;

    fe add(fe a, fe b) const {
        fe s = a + b;
        return s >= q_ ? s - q_ : s;
    }
    fe sub(fe a, fe b) const { return a >= b ? a - b : a + q_ - b; }
    fe neg(fe a) const { return a == 0 ? 0 : q_ - a; }
    fe mul(fe a, fe b) const { return (a * b) % q_; }
    fe pow(fe a, std::uint64_t e) const;
    fe inv(fe a) const;  // throws std::domain_error on a == 0

  private:
    fe q_;
    unsigned bits_;
};

/// Dense univariate polynomial, coefficients ascending. The zero polynomial
/// has an empty coefficient vector and degree -1.
struct Poly {
    std::vector<fe> c;

    int degree() const { return static_cast<int>(c.size()) - 1; }
    bool is_zero() const { return c.empty(); }
    bool monic(const Field& f) const { return !c.empty() && c.back() == 1; }

    static Poly zero() { return {}; }
    static Poly of(std::vector<fe> coeffs, const Field& f);  // trims, reduces
};

bool operator==(const Poly& a, const Poly& b);

Poly poly_add(const Field& f, const Poly& a, const Poly& b);
Poly poly_sub(const Field& f, const Poly& a, const Poly& b);
Poly poly_mul(const Field& f, const Poly& a, const Poly& b);
Poly poly_scale(const Field& f, const Poly& a, fe s);
fe poly_eval(const Field& f, const Poly& a, fe x);

/// Remainder of d divided by m. m must be monic of degree >= 1.
Poly poly_mod(const Field& f, const Poly& d, const Poly& m);
/// Quotient and remainder; m monic, degree >= 1.
std::pair<Poly, Poly> poly_divmod(const Field& f, const Poly& d, const Poly& m);
Poly poly_gcd(const Field& f, Poly a, Poly b);
Poly poly_pow_mod(const Field& f, Poly base, std::uint64_t e, const Poly& m);

/// Rabin irreducibility test (x^{q^n} == x plus gcd conditions per prime of n).
bool is_irreducible(const Field& f, const Poly& p);

/// Deterministic seeded search for a monic irreducible polynomial of the given
/// degree. Same seed, same output.
Poly find_irreducible(const Field& f, std::span<const std::uint8_t> seed, int gamma);

}  // namespace codedchain
