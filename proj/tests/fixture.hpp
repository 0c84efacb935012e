#pragma once

// Test-only world builder: genesis shards with redeemable coinbase outputs,
// honestly signed transactions, and full blocks. Independent of the network
// simulator so pipeline tests can drive the data flow by hand.

#include <optional>
#include <vector>

#include "codedchain/crypto.hpp"
#include "codedchain/ledger.hpp"
#include "codedchain/rng.hpp"
#include "codedchain/verify.hpp"

namespace codedchain::testworld {

struct World {
    Field f{2147483647ULL};
    int K, Q, N;
    EpochParams ep;  // epoch-1 layout (T = genesis t_exp)
    CryptoSuite suite;
    std::vector<UovKeys> client;         // one client per community, 1-based
    std::vector<std::vector<fe>> addr;   // hash1 of each client key
    std::vector<Shard> shards;           // uncoded genesis, 1-based
    Rng rng{0xfeedULL};

    World(int K_, int Q_, int N_, int genesis_per_shard)
        : K(K_), Q(Q_), N(N_), ep(), suite(f, 2024, base_dims()) {
        ep = base_dims();
        int T0 = std::max(1, ceil_log2(static_cast<std::uint64_t>(genesis_per_shard)));
        ep.T = T0;
        UovParams prm;  // defaults
        client.resize(K + 1);
        addr.resize(K + 1);
        shards.resize(K + 1);
        for (int k = 1; k <= K; ++k) {
            client[k] = uov_keygen(f, prm, 100 + k);
            addr[k] = suite.hash1().eval(f, client[k].pub);
            std::vector<std::vector<fe>> slots;
            for (int j = 0; j < genesis_per_shard; ++j) {
                Transaction tx;
                tx.u = Transaction::lookup_rows(T0, j);
                tx.p = client[k].pub;
                tx.a = addr[k];
                tx.s.assign(ep.Dsig, 0);
                slots.push_back(tx.serialize(ep));
            }
            shards[k].community = k;
            shards[k].append(std::move(slots), T0);
        }
    }

    static EpochParams base_dims() {
        EpochParams d;
        d.T = 1;
        return d;  // B=56, C=2, Dsig=6, E=2 defaults
    }

    /// Honestly signed transaction redeeming slot `slot` of shard k, paying a
    /// client of community r.
    Transaction make_tx(int k, int slot, int r) {
        Transaction tx;
        tx.u = Transaction::lookup_rows(ep.T, slot);
        tx.p = client[k].pub;
        tx.a = addr[r];
        std::vector<fe> upa;
        upa.insert(upa.end(), tx.u.begin(), tx.u.end());
        upa.insert(upa.end(), tx.p.begin(), tx.p.end());
        upa.insert(upa.end(), tx.a.begin(), tx.a.end());
        auto w = suite.hash2(ep.T).eval(f, upa);
        auto sig = uov_sign(f, client[k], w, rng);
        tx.s = *sig;
        return tx;
    }

    /// A full block: cell (k, r) holds Q transactions spending consecutive
    /// genesis slots of shard k.
    Block full_block() {
        std::vector<RoutedTx> txs;
        std::uint64_t id = 1;
        std::vector<int> next_slot(K + 1, 0);
        for (int k = 1; k <= K; ++k)
            for (int r = 1; r <= K; ++r)
                for (int l = 0; l < Q; ++l)
                    txs.push_back(RoutedTx{k, r, make_tx(k, next_slot[k]++, r), id++, true});
        return assemble_block(txs, K, Q, 1, ep).block;
    }

    std::vector<Symbol> tensor(int k) const { return shards[k].materialize(ep); }
};

}  // namespace codedchain::testworld
