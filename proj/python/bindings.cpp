// Python bindings for the core library. Structured results cross the
// boundary as JSON text; the package __init__ turns them into dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "llmceg/accountant.hpp"
#include "llmceg/dpsgd.hpp"
#include "llmceg/errors.hpp"
#include "llmceg/gauge.hpp"
#include "llmceg/io.hpp"
#include "llmceg/lm.hpp"
#include "llmceg/mia.hpp"
#include "llmceg/pipeline.hpp"
#include "llmceg/rng.hpp"
#include "llmceg/serialize.hpp"
#include "llmceg/synthgen.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace llmceg;

namespace {

accountant::Conversion parse_conversion(const std::string& s) { return accountant::conversion_from_string(s); }

std::vector<mia::LossSample> to_samples(const std::vector<double>& members, const std::vector<double>& nonmembers) {
    std::vector<mia::LossSample> out;
    out.reserve(members.size() + nonmembers.size());
    for (std::size_t i = 0; i < members.size(); ++i) out.push_back({members[i], true, i});
    for (std::size_t i = 0; i < nonmembers.size(); ++i) out.push_back({nonmembers[i], false, members.size() + i});
    return out;
}

pipeline::RunConfig config_from_text(const std::string& text) {
    auto cfg = text.empty() ? pipeline::default_config() : pipeline::config_from_json(json::parse(text));
    cfg.validate();
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_llmceg, m) {
    m.doc() = "Privacy-utility audit for small causal language models";

    py::register_exception<Error>(m, "LlmcegError", PyExc_ValueError);

    // synthetic data
    py::class_<synthgen::PiiRecord>(m, "PiiRecord")
        .def(py::init<>())
        .def_readwrite("name", &synthgen::PiiRecord::name)
        .def_readwrite("age", &synthgen::PiiRecord::age)
        .def_readwrite("diagnosis", &synthgen::PiiRecord::diagnosis)
        .def_readwrite("medication", &synthgen::PiiRecord::medication)
        .def_readwrite("salary", &synthgen::PiiRecord::salary)
        .def_readwrite("ssn", &synthgen::PiiRecord::ssn)
        .def("__repr__", [](const synthgen::PiiRecord& r) { return "PiiRecord(" + synthgen::serialize_record(r) + ")"; });

    m.def("generate_records", &synthgen::generate_records, py::arg("n"), py::arg("seed") = 42);
    m.def("serialize_record", &synthgen::serialize_record, py::arg("record"));
    m.def("is_valid_ssn", [](const std::string& s) { return synthgen::is_valid_ssn(s); }, py::arg("ssn"));
    m.def(
        "split_corpus",
        [](const std::vector<synthgen::PiiRecord>& records, std::size_t n_members, std::size_t n_nonmembers,
           std::uint64_t seed) {
            auto s = synthgen::split_corpus(records, n_members, n_nonmembers, seed);
            return py::make_tuple(s.members, s.nonmembers, s.member_sources, s.nonmember_sources);
        },
        py::arg("records"), py::arg("n_members"), py::arg("n_nonmembers"), py::arg("seed") = 42);
    m.def(
        "generate_general_corpus",
        [](std::size_t n, std::uint64_t seed) { return synthgen::generate_general_corpus(n, seed).sentences; },
        py::arg("n"), py::arg("seed") = 42);

    // accountant
    m.def("rdp_step", &accountant::rdp_step, py::arg("q"), py::arg("sigma"), py::arg("order"));
    m.def(
        "epsilon_spent",
        [](double sigma, double q, long steps, double delta, const std::string& conversion) {
            const auto g = accountant::epsilon_spent(sigma, {q, steps}, delta, parse_conversion(conversion));
            return py::make_tuple(g.epsilon, g.order);
        },
        py::arg("sigma"), py::arg("q"), py::arg("steps"), py::arg("delta") = 1e-5, py::arg("conversion") = "improved");
    m.def(
        "_calibrate_sigma",
        [](double epsilon, double delta, double q, long steps, const std::string& conversion) {
            json j = accountant::calibrate_sigma({epsilon, delta}, {q, steps}, parse_conversion(conversion));
            return j.dump();
        },
        py::arg("epsilon"), py::arg("delta"), py::arg("q"), py::arg("steps"), py::arg("conversion"));

    // mechanisms
    m.def(
        "clip_gradient", [](const std::vector<double>& g, double c) { return dpsgd::clip_gradient(g, c); },
        py::arg("gradient"), py::arg("max_norm"));
    m.def(
        "laplace_mechanism",
        [](double value, double sensitivity, double epsilon, std::uint64_t seed) {
            Rng rng(seed);
            const auto out = dpsgd::laplace_mechanism(value, sensitivity, epsilon, rng);
            return py::make_tuple(out.value, out.scale);
        },
        py::arg("value"), py::arg("sensitivity"), py::arg("epsilon"), py::arg("seed") = 0);

    // attack
    m.def(
        "_attack",
        [](const std::vector<double>& members, const std::vector<double>& nonmembers) {
            const auto s = to_samples(members, nonmembers);
            json j = mia::summarize(s);
            return j.dump();
        },
        py::arg("member_losses"), py::arg("nonmember_losses"));
    m.def(
        "auroc",
        [](const std::vector<double>& members, const std::vector<double>& nonmembers) {
            return mia::auroc(to_samples(members, nonmembers));
        },
        py::arg("member_losses"), py::arg("nonmember_losses"));
    m.def(
        "loss_gap",
        [](const std::vector<double>& members, const std::vector<double>& nonmembers) {
            return mia::loss_gap(to_samples(members, nonmembers));
        },
        py::arg("member_losses"), py::arg("nonmember_losses"));

    // gauge
    m.def("utility_score", &gauge::utility_score, py::arg("ppl"), py::arg("baseline_ppl"));
    m.def("check_acceptable", &gauge::check_acceptable, py::arg("advantage"), py::arg("t_p"),
          py::arg("tolerance") = 0.01);
    m.def(
        "judge",
        [](double advantage, double utility, double t_p, double t_u, double tolerance) {
            return gauge::to_string(gauge::judge(advantage, utility, {t_p, t_u, tolerance}));
        },
        py::arg("advantage"), py::arg("utility_score"), py::arg("t_p") = 0.10, py::arg("t_u") = 100.0,
        py::arg("tolerance") = 0.01);
    m.def(
        "_pareto_frontier",
        [](const std::string& points_json) {
            const auto pts = json::parse(points_json).get<std::vector<gauge::ParetoPoint>>();
            json j = gauge::pareto_frontier(pts);
            return j.dump();
        },
        py::arg("points_json"));

    // model
    m.def(
        "init_model",
        [](const std::string& path, int d_model, int n_layers, int n_heads, int context_len, std::uint64_t seed) {
            lm::ModelConfig cfg{d_model, n_layers, n_heads, context_len, seed};
            return io::save_model(path, lm::ModelParams::init(cfg));
        },
        py::arg("path"), py::arg("d_model") = 64, py::arg("n_layers") = 2, py::arg("n_heads") = 4,
        py::arg("context_len") = 160, py::arg("seed") = 42);
    m.def(
        "perplexity",
        [](const std::string& model_path, const std::vector<std::string>& corpus) {
            return lm::perplexity(io::load_model(model_path), corpus);
        },
        py::arg("model_path"), py::arg("corpus"));
    m.def(
        "sample_losses",
        [](const std::string& model_path, const std::vector<std::string>& texts) {
            const auto params = io::load_model(model_path);
            std::vector<double> out;
            out.reserve(texts.size());
            for (const auto& t : texts) out.push_back(lm::nll(params, lm::encode(t, params.config().context_len)).mean);
            return out;
        },
        py::arg("model_path"), py::arg("texts"));

    // pipeline; configs are JSON text, empty means defaults
    m.def("_default_config", [] { return pipeline::config_to_json(pipeline::default_config()).dump(); });
    m.def(
        "_gen_data",
        [](const std::string& cfg) {
            const auto r = pipeline::cmd_gen_data(config_from_text(cfg));
            return r.manifest_path.string();
        },
        py::arg("config_json"));
    m.def(
        "_train",
        [](const std::string& cfg, std::optional<double> epsilon) {
            const auto c = config_from_text(cfg);
            py::gil_scoped_release release;
            return pipeline::cmd_train(c, epsilon).model_path.string();
        },
        py::arg("config_json"), py::arg("epsilon") = py::none());
    m.def(
        "_attack_model",
        [](const std::string& cfg, const std::string& model_path) {
            const auto c = config_from_text(cfg);
            const auto out = c.output_dir / "mia.json";
            json j;
            {
                py::gil_scoped_release release;
                j = pipeline::cmd_attack(c, model_path, out, std::nullopt).result;
            }
            return j.dump();
        },
        py::arg("config_json"), py::arg("model_path"));
    m.def(
        "_audit",
        [](const std::string& cfg) {
            const auto c = config_from_text(cfg);
            json j;
            {
                py::gil_scoped_release release;
                j = pipeline::cmd_audit(c).report;
            }
            return j.dump();
        },
        py::arg("config_json"));
    m.def(
        "_sweep",
        [](const std::string& cfg) {
            const auto c = config_from_text(cfg);
            py::gil_scoped_release release;
            return pipeline::cmd_sweep(c).csv;
        },
        py::arg("config_json"));
}
