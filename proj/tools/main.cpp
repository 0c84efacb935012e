#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "codedchain/netsim.hpp"

using namespace codedchain;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty()) return;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

void print_summary(const Scenario& s, const RunResult& r) {
    std::printf("scenario: N=%d K=%d Q=%d f=%d seed=%llu epochs=%d adversary=%s\n", s.N, s.K, s.Q,
                s.f, static_cast<unsigned long long>(s.seed), s.epochs, s.adversary.c_str());
    std::printf("%-6s %-6s %-10s %-10s %-12s %s\n", "epoch", "views", "confirmed", "collateral",
                "bits", "oracle");
    for (const auto& e : r.report.epochs)
        std::printf("%-6d %-6d %-10d %-10d %-12llu %s\n", e.epoch, e.views_used, e.confirmed,
                    e.collateral, static_cast<unsigned long long>(e.bits),
                    e.oracle_equal && e.strips_match ? "ok" : "MISMATCH");
    std::printf("total: msgs=%llu bits=%llu max-view-msgs=%llu committed=%d/%d safety=%s\n",
                static_cast<unsigned long long>(r.metrics.total_msgs),
                static_cast<unsigned long long>(r.metrics.total_bits),
                static_cast<unsigned long long>(r.metrics.max_view_phase_msgs),
                r.report.epochs_committed, s.epochs,
                r.report.safety_violation ? "VIOLATED" : "ok");
}

double epoch1_tx_bits(const Scenario& s) {
    EpochParams ep = s.dims();
    ep.T = std::max(1, ceil_log2(static_cast<std::uint64_t>(s.genesis_count())));
    unsigned wq = 64 - std::countl_zero(s.q - 1);
    return static_cast<double>(ep.R()) * wq;
}

int cmd_run(const std::string& config, std::uint64_t seed_override, bool has_seed,
            const std::string& out_path, bool oracle_mode) {
    Scenario s = Scenario::from_json_text(read_file(config));
    if (has_seed) s.seed = seed_override;
    s.validate();
    RunResult r = run_scenario(s);
    write_output(out_path, r.to_json_lines(s));
    print_summary(s, r);
    if (oracle_mode) {
        if (!r.report.all_epochs_committed) {
            std::fprintf(stderr, "oracle: run incomplete, %d/%d epochs committed\n",
                         r.report.epochs_committed, s.epochs);
            return 3;
        }
        for (const auto& e : r.report.epochs) {
            if (!e.oracle_equal || !e.strips_match) {
                std::fprintf(stderr, "oracle: first divergence at epoch %d (%s)\n", e.epoch,
                             !e.oracle_equal ? "indicator" : "appended strip");
                return 3;
            }
        }
        std::printf("oracle: coded pipeline and uncoded verification agree on all %d epochs\n",
                    s.epochs);
    }
    if (r.report.safety_violation) {
        std::fprintf(stderr, "safety violation detected\n");
        return 3;
    }
    if (!r.report.oracle_all_equal || !r.report.strips_all_match) {
        std::fprintf(stderr, "oracle mismatch detected\n");
        return 3;
    }
    return 0;
}

int cmd_sweep(const std::string& sweep_path, const std::string& out_path) {
    json sw = json::parse(read_file(sweep_path));
    Scenario base = Scenario::from_json_text(sw.value("base", json::object()).dump());
    std::string axis = sw.value("axis", std::string("N"));
    int reps = sw.value("repetitions", 1);
    std::string seed_policy = sw.value("seed_policy", std::string("fixed"));

    std::string lines;
    std::printf("%-6s %-8s %-4s %-14s %-10s %-12s %-10s %-10s\n", "axis", "value", "rep",
                "total_bits", "msgs", "max_view", "gain", "tradeoff");
    for (const auto& v : sw.value("values", json::array())) {
        Scenario s = base;
        if (v.is_object()) {
            json merged = json::parse(base.to_json_text());
            for (auto it = v.begin(); it != v.end(); ++it) merged[it.key()] = it.value();
            s = Scenario::from_json_text(merged.dump());
        } else {
            int val = v.get<int>();
            if (axis == "N") {
                double ratio = base.N > 0 ? static_cast<double>(base.f) / base.N : 0;
                s.N = val;
                s.f = static_cast<int>(ratio * val + 0.5);
            } else if (axis == "Q") {
                s.Q = val;
            } else if (axis == "K") {
                s.K = val;
            } else if (axis == "f") {
                s.f = val;
            } else if (axis == "epochs") {
                s.epochs = val;
            } else {
                throw std::runtime_error("unknown sweep axis: " + axis);
            }
        }
        for (int rep = 0; rep < reps; ++rep) {
            if (seed_policy == "increment") s.seed = base.seed + rep;
            try {
                s.validate();
            } catch (const std::exception& e) {
                std::fprintf(stderr, "warning: skipping infeasible point (%s)\n", e.what());
                continue;
            }
            RunResult r = run_scenario(s);
            double per_epoch_bits =
                r.report.epochs.empty()
                    ? static_cast<double>(r.metrics.total_bits)
                    : static_cast<double>(r.metrics.total_bits) / r.report.epochs.size();
            double p_txs = static_cast<double>(s.Q) * s.K * s.K;
            double gain = per_epoch_bits > 0
                              ? s.N * p_txs * epoch1_tx_bits(s) / per_epoch_bits
                              : 0;
            double mu = static_cast<double>(s.f) / s.N;
            double tradeoff = 1.0 / ((1 - 3 * mu) * (1 - 3 * mu));
            json row;
            row["schema"] = 1;
            row["type"] = "sweep_point";
            row["axis"] = axis;
            row["N"] = s.N;
            row["K"] = s.K;
            row["Q"] = s.Q;
            row["f"] = s.f;
            row["q"] = s.q;
            row["seed"] = s.seed;
            row["rep"] = rep;
            row["total_bits"] = r.metrics.total_bits;
            row["total_msgs"] = r.metrics.total_msgs;
            row["max_view_phase_msgs"] = r.metrics.max_view_phase_msgs;
            row["per_epoch_bits"] = per_epoch_bits;
            row["gain"] = gain;
            row["tradeoff"] = tradeoff;
            row["all_epochs_committed"] = r.report.all_epochs_committed;
            json phases = json::object();
            for (const auto& [name, pm] : r.metrics.phases)
                phases[name] = {{"msgs", pm.msgs}, {"bits", pm.bits}};
            row["phases"] = phases;
            lines += row.dump() + "\n";
            std::string label = v.is_object() ? v.dump() : std::to_string(v.get<int>());
            std::printf("%-6s %-8s %-4d %-14llu %-10llu %-12llu %-10.2f %-10.3f\n", axis.c_str(),
                        label.substr(0, 8).c_str(), rep,
                        static_cast<unsigned long long>(r.metrics.total_bits),
                        static_cast<unsigned long long>(r.metrics.total_msgs),
                        static_cast<unsigned long long>(r.metrics.max_view_phase_msgs), gain,
                        tradeoff);
        }
    }
    write_output(out_path, lines);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"codedchain: coded-verification blockchain simulator"};
    std::string config, sweep, out;
    std::uint64_t seed = 0;
    bool oracle = false;
    auto* seed_opt = app.add_option("--seed", seed, "override the scenario seed");
    app.add_option("--config", config, "scenario JSON file");
    app.add_option("--sweep", sweep, "sweep spec JSON file");
    app.add_option("--out", out, "write JSON-lines metrics to this path");
    app.add_flag("--oracle", oracle, "diff the coded pipeline against uncoded verification");
    CLI11_PARSE(app, argc, argv);

    try {
        if (!sweep.empty()) return cmd_sweep(sweep, out);
        if (!config.empty()) return cmd_run(config, seed, seed_opt->count() > 0, out, oracle);
    } catch (const json::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    std::fprintf(stderr, "nothing to do: pass --config or --sweep (see --help)\n");
    return 1;
}
