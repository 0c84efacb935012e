#include "codedchain/coding.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

#include "codedchain/rng.hpp"

namespace codedchain {

EvalPoints EvalPoints::make(const Field& f, int K, int N, int L) {
    if (K < 1 || N < 1 || L < 1) throw std::invalid_argument("K, N, L must be positive");
    if (static_cast<std::uint64_t>(K) + N + L >= f.q())
        throw std::invalid_argument("field too small for distinct evaluation points");
    EvalPoints p;
    for (int k = 1; k <= K; ++k) p.omega.push_back(k);
    for (int i = 1; i <= N; ++i) p.alpha.push_back(K + i);
    for (int l = 1; l <= L; ++l) p.beta.push_back(K + N + l);
    return p;
}

void EvalPoints::validate(const Field& f) const {
    std::unordered_set<fe> seen;
    for (const auto* v : {&omega, &alpha, &beta})
        for (fe x : *v)
            if (!seen.insert(x % f.q()).second)
                throw std::invalid_argument("evaluation points must be pairwise distinct");
}

LagrangeMatrix LagrangeMatrix::build(const Field& f, const EvalPoints& pts) {
    pts.validate(f);
    int K = static_cast<int>(pts.omega.size());
    int N = static_cast<int>(pts.alpha.size());
    LagrangeMatrix g;
    g.m.assign(K, std::vector<fe>(N, 0));
    for (int k = 0; k < K; ++k) {
        fe denom = 1;
        for (int j = 0; j < K; ++j)
            if (j != k) denom = f.mul(denom, f.sub(pts.omega[k], pts.omega[j]));
        fe denom_inv = f.inv(denom);
        for (int i = 0; i < N; ++i) {
            fe num = 1;
            for (int j = 0; j < K; ++j)
                if (j != k) num = f.mul(num, f.sub(pts.alpha[i], pts.omega[j]));
            g.m[k][i] = f.mul(num, denom_inv);
        }
    }
    return g;
}

namespace {

void check_uniform(const std::vector<Symbol>& xs, const char* what) {
    for (size_t i = 1; i < xs.size(); ++i)
        if (xs[i].size() != xs[0].size()) throw std::invalid_argument(what);
}

std::vector<Symbol> combine(const Field& f, const std::vector<std::vector<fe>>& weights,
                            const std::vector<Symbol>& data, size_t out_n) {
    // out[j] = sum_k weights[k][j] * data[k]
    check_uniform(data, "symbol dimensions must match");
    size_t dim = data.empty() ? 0 : data[0].size();
    std::vector<Symbol> out(out_n, Symbol(dim, 0));
    for (size_t k = 0; k < data.size(); ++k)
        for (size_t j = 0; j < out_n; ++j) {
            fe w = weights[k][j];
            if (w == 0) continue;
            auto& dst = out[j];
            const auto& src = data[k];
            for (size_t c = 0; c < dim; ++c) dst[c] = f.add(dst[c], f.mul(w, src[c]));
        }
    return out;
}

}  // namespace

std::vector<Symbol> encode_vector(const Field& f, const LagrangeMatrix& g,
                                  const std::vector<Symbol>& m) {
    if (static_cast<int>(m.size()) != g.K())
        throw std::invalid_argument("encode_vector expects a length-K vector");
    return combine(f, g.m, m, g.N());
}

std::vector<Symbol> encode_rows(const Field& f, const LagrangeMatrix& g,
                                const std::vector<Symbol>& rows) {
    if (static_cast<int>(rows.size()) != g.K())
        throw std::invalid_argument("encode_rows expects K rows");
    return combine(f, g.m, rows, g.N());
}

ResultGenerators ResultGenerators::make(const Field& f, const EvalPoints& pts) {
    pts.validate(f);
    int L = static_cast<int>(pts.beta.size());
    ResultGenerators gen;
    gen.at_alpha.assign(L, std::vector<fe>(pts.alpha.size(), 0));
    gen.at_omega.assign(L, std::vector<fe>(pts.omega.size(), 0));
    for (int l = 0; l < L; ++l) {
        fe denom = 1;
        for (int j = 0; j < L; ++j)
            if (j != l) denom = f.mul(denom, f.sub(pts.beta[l], pts.beta[j]));
        fe denom_inv = f.inv(denom);
        auto basis_at = [&](fe z) {
            fe num = 1;
            for (int j = 0; j < L; ++j)
                if (j != l) num = f.mul(num, f.sub(z, pts.beta[j]));
            return f.mul(num, denom_inv);
        };
        for (size_t i = 0; i < pts.alpha.size(); ++i) gen.at_alpha[l][i] = basis_at(pts.alpha[i]);
        for (size_t k = 0; k < pts.omega.size(); ++k) gen.at_omega[l][k] = basis_at(pts.omega[k]);
    }
    return gen;
}

namespace {

// Solves A x = b over F_q by Gaussian elimination; free variables are set to
// zero. Returns nullopt when inconsistent.
std::optional<std::vector<fe>> solve_linear(const Field& f, std::vector<std::vector<fe>> a,
                                            std::vector<fe> b) {
    size_t rows = a.size();
    size_t cols = rows == 0 ? 0 : a[0].size();
    std::vector<int> pivot_col_of_row;
    size_t r = 0;
    for (size_t c = 0; c < cols && r < rows; ++c) {
        size_t piv = r;
        while (piv < rows && a[piv][c] == 0) ++piv;
        if (piv == rows) continue;
        std::swap(a[piv], a[r]);
        std::swap(b[piv], b[r]);
        fe inv = f.inv(a[r][c]);
        for (size_t j = c; j < cols; ++j) a[r][j] = f.mul(a[r][j], inv);
        b[r] = f.mul(b[r], inv);
        for (size_t i = 0; i < rows; ++i) {
            if (i == r || a[i][c] == 0) continue;
            fe factor = a[i][c];
            for (size_t j = c; j < cols; ++j) a[i][j] = f.sub(a[i][j], f.mul(factor, a[r][j]));
            b[i] = f.sub(b[i], f.mul(factor, b[r]));
        }
        pivot_col_of_row.push_back(static_cast<int>(c));
        ++r;
    }
    for (size_t i = r; i < rows; ++i)
        if (b[i] != 0) return std::nullopt;
    std::vector<fe> x(cols, 0);
    for (size_t i = 0; i < r; ++i) x[pivot_col_of_row[i]] = b[i];
    return x;
}

// Interpolating polynomial (degree < n) through (xs, ys), coefficient form.
Poly interpolate(const Field& f, const std::vector<fe>& xs, const std::vector<fe>& ys) {
    Poly acc = Poly::zero();
    size_t n = xs.size();
    for (size_t i = 0; i < n; ++i) {
        Poly basis{{1}};
        fe denom = 1;
        for (size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            basis = poly_mul(f, basis, Poly{{f.neg(xs[j]), 1}});
            denom = f.mul(denom, f.sub(xs[i], xs[j]));
        }
        acc = poly_add(f, acc, poly_scale(f, basis, f.mul(ys[i], f.inv(denom))));
    }
    return acc;
}

struct ScalarDecode {
    Poly poly;                    // degree < L
    std::vector<int> error_pos;   // positions (into the received set) flagged bad
};

// Berlekamp-Welch on scalars. positions/values are parallel arrays.
std::optional<ScalarDecode> bw_decode_scalar(const Field& f, const std::vector<fe>& xs,
                                             const std::vector<fe>& ys, int L, int e) {
    int n = static_cast<int>(xs.size());
    if (e == 0) {
        std::vector<fe> px(xs.begin(), xs.begin() + L), py(ys.begin(), ys.begin() + L);
        Poly p = interpolate(f, px, py);
        if (p.degree() >= L) return std::nullopt;
        for (int i = 0; i < n; ++i)
            if (poly_eval(f, p, xs[i]) != ys[i]) return std::nullopt;
        return ScalarDecode{p, {}};
    }
    // Unknowns: Q of degree < L+e, E monic of degree e (e free coefficients).
    // Q(x_i) - y_i * E(x_i) = y_i * x_i^e for all i.
    int qn = L + e;
    std::vector<std::vector<fe>> a(n, std::vector<fe>(qn + e, 0));
    std::vector<fe> b(n, 0);
    for (int i = 0; i < n; ++i) {
        fe p = 1;
        for (int j = 0; j < qn; ++j) {
            a[i][j] = p;
            p = f.mul(p, xs[i]);
        }
        p = 1;
        for (int j = 0; j < e; ++j) {
            a[i][qn + j] = f.neg(f.mul(ys[i], p));
            p = f.mul(p, xs[i]);
        }
        b[i] = f.mul(ys[i], f.pow(xs[i], e));
    }
    auto sol = solve_linear(f, std::move(a), std::move(b));
    if (!sol) return std::nullopt;
    Poly qpoly = Poly::of(std::vector<fe>(sol->begin(), sol->begin() + qn), f);
    std::vector<fe> ec(sol->begin() + qn, sol->end());
    ec.push_back(1);
    Poly epoly = Poly::of(std::move(ec), f);
    auto [quot, rem] = poly_divmod(f, qpoly, epoly);
    if (!rem.is_zero() || quot.degree() >= L) return std::nullopt;
    ScalarDecode out{quot, {}};
    for (int i = 0; i < n; ++i)
        if (poly_eval(f, quot, xs[i]) != ys[i]) out.error_pos.push_back(i);
    if (static_cast<int>(out.error_pos.size()) > e) return std::nullopt;
    return out;
}

}  // namespace

std::optional<std::vector<Symbol>> rs_decode(const Field& f,
                                             const std::map<int, Symbol>& received, int L,
                                             const EvalPoints& pts, int max_errors) {
    if (L < 1 || max_errors < 0) throw std::invalid_argument("bad decode parameters");
    int n = static_cast<int>(received.size());
    if (n < L + 2 * max_errors) return std::nullopt;

    std::vector<fe> xs;
    std::vector<const Symbol*> syms;
    for (const auto& [pos, sym] : received) {
        if (pos < 0 || pos >= static_cast<int>(pts.alpha.size()))
            throw std::invalid_argument("received position outside alpha range");
        xs.push_back(pts.alpha[pos]);
        syms.push_back(&sym);
    }
    size_t dim = syms[0]->size();
    for (const auto* s : syms)
        if (s->size() != dim) throw std::invalid_argument("symbol dimensions must match");

    auto finish = [&](const std::vector<Poly>& comp) {
        std::vector<Symbol> out(pts.beta.size(), Symbol(dim, 0));
        for (size_t l = 0; l < pts.beta.size(); ++l)
            for (size_t c = 0; c < dim; ++c) out[l][c] = poly_eval(f, comp[c], pts.beta[l]);
        return out;
    };

    // Corruption hits whole symbols, so locate errors once on a random linear
    // projection of the components, then interpolate every component from the
    // clean positions and verify.
    Rng rng(0x1f0c0ded ^ (static_cast<std::uint64_t>(n) << 32) ^ dim);
    std::vector<fe> rho(dim);
    for (auto& r : rho) r = 1 + rng.below(f.q() - 1);
    std::vector<fe> proj(n, 0);
    for (int i = 0; i < n; ++i) {
        fe acc = 0;
        for (size_t c = 0; c < dim; ++c) acc = f.add(acc, f.mul(rho[c], (*syms[i])[c]));
        proj[i] = acc;
    }
    auto scalar = bw_decode_scalar(f, xs, proj, L, max_errors);
    if (scalar) {
        std::vector<char> bad(n, 0);
        for (int p : scalar->error_pos) bad[p] = 1;
        std::vector<fe> cx;
        std::vector<int> clean;
        for (int i = 0; i < n && static_cast<int>(clean.size()) < L; ++i)
            if (!bad[i]) {
                clean.push_back(i);
                cx.push_back(xs[i]);
            }
        if (static_cast<int>(clean.size()) == L) {
            std::vector<Poly> comp(dim);
            bool ok = true;
            for (size_t c = 0; c < dim && ok; ++c) {
                std::vector<fe> cy;
                for (int i : clean) cy.push_back((*syms[i])[c]);
                comp[c] = interpolate(f, cx, cy);
                if (comp[c].degree() >= L) ok = false;
            }
            if (ok) {
                int mismatches = 0;
                for (int i = 0; i < n; ++i) {
                    bool hit = false;
                    for (size_t c = 0; c < dim; ++c)
                        if (poly_eval(f, comp[c], xs[i]) != (*syms[i])[c]) {
                            hit = true;
                            break;
                        }
                    if (hit) ++mismatches;
                }
                if (mismatches <= max_errors) return finish(comp);
            }
        }
    }

    // Projection collided or located wrongly; decode each component on its own.
    std::vector<Poly> comp(dim);
    for (size_t c = 0; c < dim; ++c) {
        std::vector<fe> ys(n);
        for (int i = 0; i < n; ++i) ys[i] = (*syms[i])[c];
        auto dec = bw_decode_scalar(f, xs, ys, L, max_errors);
        if (!dec) return std::nullopt;
        comp[c] = dec->poly;
    }
    int mismatches = 0;
    for (int i = 0; i < n; ++i) {
        bool hit = false;
        for (size_t c = 0; c < dim; ++c)
            if (poly_eval(f, comp[c], xs[i]) != (*syms[i])[c]) {
                hit = true;
                break;
            }
        if (hit) ++mismatches;
    }
    if (mismatches > max_errors) return std::nullopt;
    return finish(comp);
}

std::vector<Symbol> result_to_uncoded(const Field& f, const std::vector<Symbol>& beta_values,
                                      const ResultGenerators& gen) {
    if (beta_values.size() != gen.at_omega.size())
        throw std::invalid_argument("expected one value per beta point");
    size_t K = gen.at_omega.empty() ? 0 : gen.at_omega[0].size();
    size_t dim = beta_values.empty() ? 0 : beta_values[0].size();
    std::vector<Symbol> out(K, Symbol(dim, 0));
    for (size_t l = 0; l < beta_values.size(); ++l) {
        if (beta_values[l].size() != dim) throw std::invalid_argument("symbol dimension mismatch");
        for (size_t k = 0; k < K; ++k) {
            fe w = gen.at_omega[l][k];
            if (w == 0) continue;
            for (size_t c = 0; c < dim; ++c)
                out[k][c] = f.add(out[k][c], f.mul(w, beta_values[l][c]));
        }
    }
    return out;
}

}  // namespace codedchain
