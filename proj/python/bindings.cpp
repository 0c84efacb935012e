#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "codedchain/netsim.hpp"

namespace py = pybind11;
using namespace codedchain;

namespace {

std::vector<std::vector<fe>> to_matrix(const LagrangeMatrix& g) { return g.m; }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Coded-verification blockchain simulator core";

    py::class_<Field>(m, "Field")
        .def(py::init<fe>(), py::arg("q"))
        .def_property_readonly("q", &Field::q)
        .def_property_readonly("bits", &Field::bits)
        .def("add", &Field::add)
        .def("sub", &Field::sub)
        .def("mul", &Field::mul)
        .def("inv", &Field::inv)
        .def("pow", &Field::pow);

    m.def(
        "build_generator",
        [](const Field& f, int K, int N) {
            return to_matrix(LagrangeMatrix::build(f, EvalPoints::make(f, K, N, 1)));
        },
        py::arg("field"), py::arg("K"), py::arg("N"),
        "K x N Lagrange generator matrix over the canonical evaluation points");

    m.def(
        "encode_vector",
        [](const Field& f, int K, int N, const std::vector<Symbol>& data) {
            LagrangeMatrix g = LagrangeMatrix::build(f, EvalPoints::make(f, K, N, 1));
            return encode_vector(f, g, data);
        },
        py::arg("field"), py::arg("K"), py::arg("N"), py::arg("data"));

    m.def(
        "rs_decode",
        [](const Field& f, int K, int N, int L, const std::map<int, Symbol>& received,
           int max_errors) {
            EvalPoints pts = EvalPoints::make(f, K, N, L);
            return rs_decode(f, received, L, pts, max_errors);
        },
        py::arg("field"), py::arg("K"), py::arg("N"), py::arg("L"), py::arg("received"),
        py::arg("max_errors"),
        "Values at the beta interpolation points, or None on decode failure");

    m.def(
        "find_irreducible",
        [](const Field& f, const std::string& seed, int gamma) {
            Poly p = find_irreducible(
                f, std::span(reinterpret_cast<const std::uint8_t*>(seed.data()), seed.size()),
                gamma);
            return p.c;
        },
        py::arg("field"), py::arg("seed"), py::arg("gamma"));

    m.def(
        "fingerprint",
        [](const Field& f, const std::vector<fe>& key_coeffs, const std::vector<fe>& data) {
            return fp(f, Poly{key_coeffs}, data);
        },
        py::arg("field"), py::arg("key"), py::arg("data"),
        "Division fingerprint of data under a monic key polynomial");

    m.def(
        "uov_keygen_sign_verify",
        [](fe q, int oil, int vinegar, int E, std::uint64_t seed,
           const std::vector<fe>& digest) {
            Field f(q);
            UovParams prm{oil, vinegar, E};
            UovKeys keys = uov_keygen(f, prm, seed);
            Rng rng(seed ^ 0x517f00dULL);
            auto sig = uov_sign(f, keys, digest, rng);
            if (!sig) throw std::runtime_error("signing failed");
            auto check = mq_eval(f, prm, keys.pub, *sig);
            return py::make_tuple(*sig, check == digest);
        },
        py::arg("q"), py::arg("oil"), py::arg("vinegar"), py::arg("E"), py::arg("seed"),
        py::arg("digest"),
        "Round-trips a signature and reports whether MQ(p, s) == digest");

    m.def(
        "run_scenario",
        [](const std::string& scenario_json) {
            Scenario s = Scenario::from_json_text(scenario_json);
            RunResult r = run_scenario(s);
            return r.to_json_lines(s);
        },
        py::arg("scenario_json"),
        "Runs a scenario and returns its JSON-lines metrics (epochs plus summary)");

    m.def("default_scenario", [] { return Scenario{}.to_json_text(); });

    m.attr("__version__") = "0.1.0";
}
