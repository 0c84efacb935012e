#include "codedchain/crypto.hpp"

#include <set>
#include <stdexcept>

#include "codedchain/rng.hpp"
#include "doctest.h"

using namespace codedchain;

TEST_CASE("node signatures round-trip and reject tampering") {
    for (auto mode : {KeyRegistry::Mode::TestDouble, KeyRegistry::Mode::Ed25519}) {
        KeyRegistry reg(mode, 4, 77);
        Bytes msg{1, 2, 3, 4, 5};
        Bytes sig = reg.sign(2, msg);
        CHECK(reg.verify(2, msg, sig));
        CHECK_FALSE(reg.verify(1, msg, sig));  // wrong node id
        CHECK_THROWS_AS((void)reg.sign(9, msg), std::out_of_range);
    }
}

TEST_CASE("bit-flips never verify (sampled trials)") {
    KeyRegistry reg(KeyRegistry::Mode::TestDouble, 3, 42);
    Rng rng(7);
    int false_accepts = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        Bytes msg(16);
        for (auto& b : msg) b = static_cast<std::uint8_t>(rng.next());
        Bytes sig = reg.sign(0, msg);
        Bytes flipped = msg;
        flipped[rng.below(flipped.size())] ^= static_cast<std::uint8_t>(1u << rng.below(8));
        if (reg.verify(0, flipped, sig)) ++false_accepts;
    }
    CHECK(false_accepts == 0);
}

TEST_CASE("threshold counting schemes") {
    int N = 16, f = 2, K = 2;
    KeyRegistry reg(KeyRegistry::Mode::TestDouble, N, 5);
    ThresholdScheme pi{"pi", N - f, N};
    ThresholdScheme lambda{"lambda", K + f, N};
    ThresholdScheme tau{"tau", f + 1, N};
    Bytes msg{9, 9, 9};

    SUBCASE("pi combines from a quorum of N-f") {
        std::vector<PartialSig> partials;
        for (int i = 0; i < N - f; ++i) partials.push_back(tpartial(reg, pi, i, msg));
        auto ts = tcombine(reg, pi, msg, partials);
        REQUIRE(ts.has_value());
        CHECK(tverify(reg, pi, msg, *ts));
        Bytes other{9, 9, 8};
        CHECK_FALSE(tverify(reg, pi, other, *ts));
    }
    SUBCASE("t-1 partials fail to combine") {
        std::vector<PartialSig> partials;
        for (int i = 0; i < N - f - 1; ++i) partials.push_back(tpartial(reg, pi, i, msg));
        CHECK_FALSE(tcombine(reg, pi, msg, partials).has_value());
    }
    SUBCASE("a partial on a different message does not count") {
        std::vector<PartialSig> partials;
        for (int i = 0; i + 1 < N - f; ++i) partials.push_back(tpartial(reg, pi, i, msg));
        Bytes other{0};
        partials.push_back(tpartial(reg, pi, N - f - 1, other));
        CHECK_FALSE(tcombine(reg, pi, msg, partials).has_value());
    }
    SUBCASE("duplicate signers count once") {
        std::vector<PartialSig> partials;
        for (int rep = 0; rep < 5; ++rep)
            for (int i = 0; i < tau.t - 1; ++i) partials.push_back(tpartial(reg, tau, i, msg));
        CHECK_FALSE(tcombine(reg, tau, msg, partials).has_value());
        partials.push_back(tpartial(reg, tau, tau.t - 1, msg));
        CHECK(tcombine(reg, tau, msg, partials).has_value());
    }
    SUBCASE("combination is monotone in the partial set") {
        std::vector<PartialSig> partials;
        for (int i = 0; i < lambda.t; ++i) partials.push_back(tpartial(reg, lambda, i, msg));
        CHECK(tcombine(reg, lambda, msg, partials).has_value());
        for (int i = lambda.t; i < N; ++i) {
            partials.push_back(tpartial(reg, lambda, i, msg));
            CHECK(tcombine(reg, lambda, msg, partials).has_value());
        }
    }
    SUBCASE("schemes are domain separated") {
        std::vector<PartialSig> partials;
        for (int i = 0; i < tau.t; ++i) partials.push_back(tpartial(reg, lambda, i, msg));
        CHECK_FALSE(tcombine(reg, tau, msg, partials).has_value());
    }
}

TEST_CASE("uov sign/verify round trip") {
    Field f(2147483647ULL);
    UovParams prm;  // oil=2, vinegar=4, E=2
    UovKeys keys = uov_keygen(f, prm, 1234);
    Rng rng(55);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<fe> w{rng.below(f.q()), rng.below(f.q())};
        auto sig = uov_sign(f, keys, w, rng);
        REQUIRE(sig.has_value());
        CHECK(mq_eval(f, prm, keys.pub, *sig) == w);
    }
}

TEST_CASE("tampered uov signatures evaluate elsewhere") {
    Field f(2147483647ULL);
    UovParams prm;
    UovKeys keys = uov_keygen(f, prm, 99);
    Rng rng(66);
    std::vector<fe> w{17, 23};
    auto sig = uov_sign(f, keys, w, rng);
    REQUIRE(sig.has_value());
    int collisions = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        auto bent = *sig;
        bent[rng.below(bent.size())] = f.add(bent[rng.below(bent.size())], 1 + rng.below(1000));
        if (mq_eval(f, prm, keys.pub, bent) == w) ++collisions;
    }
    CHECK(collisions == 0);
}

TEST_CASE("tiny uov instance q=7 checked exhaustively") {
    Field f(7);
    UovParams prm{2, 2, 2};  // D = 4, E = 2
    UovKeys keys = uov_keygen(f, prm, 3);
    Rng rng(4);
    std::vector<fe> w{3, 5};
    auto sig = uov_sign(f, keys, w, rng);
    REQUIRE(sig.has_value());
    // Brute-force all 7^4 candidate signatures; the signer's output must be
    // among the solutions of MQ(p, s) = w.
    std::set<std::vector<fe>> solutions;
    for (fe a = 0; a < 7; ++a)
        for (fe b = 0; b < 7; ++b)
            for (fe c = 0; c < 7; ++c)
                for (fe d = 0; d < 7; ++d) {
                    std::vector<fe> s{a, b, c, d};
                    if (mq_eval(f, prm, keys.pub, s) == w) solutions.insert(s);
                }
    CHECK(solutions.count(*sig) == 1);
}

TEST_CASE("uov rejects oil below E") {
    Field f(7);
    CHECK_THROWS_AS(uov_keygen(f, UovParams{1, 2, 2}, 1), std::invalid_argument);
}

TEST_CASE("hash polynomials") {
    Field f(2147483647ULL);
    HashPoly h(f, 31337, 8, 3);

    SUBCASE("the all-zero input maps to the constant terms, which are zero") {
        std::vector<fe> zero(8, 0);
        CHECK(h.eval(f, zero) == std::vector<fe>{0, 0, 0});
    }
    SUBCASE("deterministic") {
        std::vector<fe> x{1, 2, 3, 4, 5, 6, 7, 8};
        CHECK(h.eval(f, x) == HashPoly(f, 31337, 8, 3).eval(f, x));
    }
    SUBCASE("length mismatch is rejected") {
        std::vector<fe> x{1, 2};
        CHECK_THROWS_AS(h.eval(f, x), std::invalid_argument);
    }
    SUBCASE("no collisions over sampled input pairs") {
        Rng rng(404);
        int collisions = 0;
        for (int trial = 0; trial < 100000; ++trial) {
            std::vector<fe> x(8), y(8);
            for (auto& v : x) v = rng.below(f.q());
            y = x;
            y[rng.below(8)] = f.add(y[rng.below(8)], 1 + rng.below(1000));
            if (h.eval(f, x) == h.eval(f, y)) ++collisions;
        }
        CHECK(collisions == 0);
    }
    SUBCASE("numeric degree along a random line is exactly 3") {
        // Restrict to x0 + t*dx: the 3rd finite difference of a cubic is a
        // nonzero constant and the 4th vanishes.
        Rng rng(11);
        std::vector<fe> x0(8), dx(8);
        for (auto& v : x0) v = rng.below(f.q());
        for (auto& v : dx) v = rng.below(f.q());
        auto at = [&](fe t) {
            std::vector<fe> x(8);
            for (int i = 0; i < 8; ++i) x[i] = f.add(x0[i], f.mul(t, dx[i]));
            return h.eval(f, x)[0];
        };
        std::vector<fe> vals;
        for (fe t = 0; t < 6; ++t) vals.push_back(at(t));
        auto diff = [&](std::vector<fe> v) {
            std::vector<fe> d;
            for (size_t i = 0; i + 1 < v.size(); ++i) d.push_back(f.sub(v[i + 1], v[i]));
            return d;
        };
        auto d3 = diff(diff(diff(vals)));
        auto d4 = diff(d3);
        CHECK(d3[0] != 0);
        for (fe v : d4) CHECK(v == 0);
    }
}

TEST_CASE("division fingerprint") {
    Field f(7);
    Poly r = Poly::of({1, 0, 1}, f);  // x^2 + 1

    SUBCASE("worked example") {
        std::vector<fe> d{1, 2, 3};
        CHECK(fp(f, r, d) == std::vector<fe>{5, 2});
    }
    SUBCASE("zero maps to zero") {
        std::vector<fe> d{0, 0, 0, 0};
        CHECK(fp(f, r, d) == std::vector<fe>{0, 0});
    }
    SUBCASE("homomorphism over random pairs") {
        Field big(2147483647ULL);
        Poly rb = find_irreducible(big, std::array<std::uint8_t, 1>{5}, 2);
        Rng rng(8);
        for (int trial = 0; trial < 1000; ++trial) {
            std::vector<fe> x(20), y(20), z(20);
            fe a = rng.below(big.q()), b = rng.below(big.q());
            for (int i = 0; i < 20; ++i) {
                x[i] = rng.below(big.q());
                y[i] = rng.below(big.q());
                z[i] = big.add(big.mul(a, x[i]), big.mul(b, y[i]));
            }
            auto fx = fp(big, rb, x), fy = fp(big, rb, y), fz = fp(big, rb, z);
            for (int c = 0; c < 2; ++c)
                CHECK(fz[c] == big.add(big.mul(a, fx[c]), big.mul(b, fy[c])));
        }
    }
    SUBCASE("collision rate over distinct random strips is negligible") {
        Field big(2147483647ULL);
        Rng rng(12);
        int collisions = 0;
        for (int trial = 0; trial < 10000; ++trial) {
            std::vector<fe> x(16), y(16);
            for (int i = 0; i < 16; ++i) {
                x[i] = rng.below(big.q());
                y[i] = rng.below(big.q());
            }
            if (x == y) continue;
            // Fresh key per trial, as the checksum draws keys per block.
            std::uint8_t seed[1] = {static_cast<std::uint8_t>(trial)};
            Poly key =
                find_irreducible(big, std::span<const std::uint8_t>(seed, 1), 2);
            if (fp(big, key, x) == fp(big, key, y)) ++collisions;
        }
        CHECK(collisions == 0);
    }
}

TEST_CASE("checksum and agree") {
    Field f(2147483647ULL);
    int K = 2, N = 4, lambda = 2, gamma = 2;
    EvalPoints pts = EvalPoints::make(f, K, N, 1);
    LagrangeMatrix g = LagrangeMatrix::build(f, pts);
    Rng rng(2);
    std::vector<Symbol> rows(K, Symbol(12));
    for (auto& r : rows)
        for (auto& v : r) v = rng.below(f.q());

    auto [cks, coded] = make_checksum(f, g, rows, lambda, gamma);
    REQUIRE(static_cast<int>(coded.size()) == N);

    SUBCASE("honest fragments agree") {
        for (int i = 0; i < N; ++i) CHECK(agree(f, g, cks, coded[i], i, gamma));
    }
    SUBCASE("fragment presented under the wrong index fails") {
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j)
                if (i != j) CHECK_FALSE(agree(f, g, cks, coded[i], j, gamma));
    }
    SUBCASE("different blocks give different hash lists") {
        auto rows2 = rows;
        rows2[0][0] = f.add(rows2[0][0], 1);
        auto [cks2, coded2] = make_checksum(f, g, rows2, lambda, gamma);
        CHECK(cks.cc != cks2.cc);
    }
    SUBCASE("all-zero rows fingerprint to zero") {
        std::vector<Symbol> zero_rows(K, Symbol(12, 0));
        auto [ckz, codz] = make_checksum(f, g, zero_rows, lambda, gamma);
        for (const auto& fpv : ckz.fps)
            for (fe v : fpv) CHECK(v == 0);
    }
    SUBCASE("equivocated fragments are rejected except with fp collisions") {
        // Fragments generated from a different block under this checksum.
        int false_accepts = 0;
        Rng arng(3);
        for (int trial = 0; trial < 10000; ++trial) {
            auto rows2 = rows;
            rows2[arng.below(K)][arng.below(12)] = arng.below(f.q());
            auto coded2 = encode_rows(f, g, rows2);
            int i = static_cast<int>(arng.below(N));
            if (coded2[i] == coded[i]) continue;
            if (agree(f, g, cks, coded2[i], i, gamma)) ++false_accepts;
        }
        CHECK(false_accepts == 0);
    }
}

TEST_CASE("mq_eval restricted to a line in (p, s) has numeric degree 3") {
    // Degree 1 in the packed coefficients times degree 2 in the signature.
    Field f(2147483647ULL);
    UovParams prm;
    Rng rng(21);
    std::vector<fe> p0(prm.B()), dp(prm.B()), s0(prm.D()), ds(prm.D());
    for (auto* v : {&p0, &dp})
        for (auto& x : *v) x = rng.below(f.q());
    for (auto* v : {&s0, &ds})
        for (auto& x : *v) x = rng.below(f.q());
    auto at = [&](fe t) {
        std::vector<fe> p(prm.B()), s(prm.D());
        for (int i = 0; i < prm.B(); ++i) p[i] = f.add(p0[i], f.mul(t, dp[i]));
        for (int i = 0; i < prm.D(); ++i) s[i] = f.add(s0[i], f.mul(t, ds[i]));
        return mq_eval(f, prm, p, s)[0];
    };
    std::vector<fe> vals;
    for (fe t = 0; t < 6; ++t) vals.push_back(at(t));
    auto diff = [&](std::vector<fe> v) {
        std::vector<fe> d;
        for (size_t i = 0; i + 1 < v.size(); ++i) d.push_back(f.sub(v[i + 1], v[i]));
        return d;
    };
    auto d3 = diff(diff(diff(vals)));
    auto d4 = diff(d3);
    CHECK(d3[0] != 0);
    for (fe v : d4) CHECK(v == 0);
}
