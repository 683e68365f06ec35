#include "llmceg/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <thread>

#include "llmceg/errors.hpp"
#include "llmceg/io.hpp"
#include "llmceg/serialize.hpp"

namespace llmceg::pipeline {

using nlohmann::json;

namespace {

std::mutex log_mutex;

void log(const RunConfig& cfg, const std::string& msg) {
    if (!cfg.verbose) return;
    std::lock_guard lock(log_mutex);
    std::cerr << "[llmceg] " << msg << '\n';
}

std::string fmt(double v, const char* format = "%.4g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json read_json(const fs::path& p) {
    try {
        return json::parse(io::read_file(p));
    } catch (const json::exception& e) {
        throw IoError("invalid JSON in " + p.string() + ": " + e.what());
    }
}

template <class T>
void read_opt(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

fs::path data_dir(const RunConfig& cfg) { return cfg.output_dir / "data"; }
fs::path models_dir(const RunConfig& cfg) { return cfg.output_dir / "models"; }

dpsgd::TrainConfig default_pretrain() {
    dpsgd::TrainConfig t;
    t.epochs = 4;
    t.batch_size = 8;
    t.learning_rate = 3e-3;
    t.seed = 42;
    return t;
}

dpsgd::TrainConfig default_finetune() {
    dpsgd::TrainConfig t;
    t.epochs = 10;
    t.batch_size = 8;
    t.learning_rate = 1e-3;
    t.noise.seed = 4242;
    t.seed = 42;
    return t;
}

constexpr const char* kSamplingNote =
    "accounting assumes Poisson sampling at q = batch_size / n; training uses fixed-size shuffled batches";

gauge::PrivacySummary privacy_summary(const TrainedModel& m, const RunConfig& cfg) {
    gauge::PrivacySummary p;
    p.epsilon_target = m.epsilon;
    p.epsilon_achieved = m.trace.epsilon;
    p.delta = m.trace.delta;
    p.sigma = m.trace.sigma;
    p.clip_norm = m.trace.clip_norm;
    p.q = m.trace.q;
    p.steps = m.trace.steps;
    p.optimal_order = m.trace.optimal_order;
    p.conversion = m.trace.dp_enabled ? accountant::to_string(cfg.privacy.conversion) : "none";
    p.sampling_note = m.trace.dp_enabled ? kSamplingNote : "";
    return p;
}

}  // namespace

void RunConfig::validate() const {
    if (data.n_members == 0 || data.n_nonmembers == 0)
        throw SizeError("n_members and n_nonmembers must be positive");
    if (data.n_members + data.n_nonmembers > data.n_records)
        throw SizeError("n_members + n_nonmembers exceeds n_records");
    if (data.n_general == 0) throw SizeError("n_general must be positive");
    model.validate();
    pretrain.validate();
    train.validate();
    if (!(privacy.delta > 0.0 && privacy.delta < 1.0)) throw ParameterError("delta must lie in (0, 1)");
    for (double e : privacy.sweep_epsilons)
        if (!(e > 0.0)) throw ParameterError("sweep epsilons must be positive");
    privacy.thresholds.validate();
    privacy.schedule.validate();
    if (workers < 0) throw ParameterError("workers must be >= 0");
}

RunConfig default_config() {
    RunConfig c;
    c.pretrain = default_pretrain();
    c.train = default_finetune();
    return c;
}

RunConfig config_from_json(const json& j) {
    RunConfig c = default_config();
    if (!j.is_object()) throw ParameterError("config must be a JSON object");
    if (j.contains("data")) {
        const auto& d = j.at("data");
        read_opt(d, "n_records", c.data.n_records);
        read_opt(d, "n_members", c.data.n_members);
        read_opt(d, "n_nonmembers", c.data.n_nonmembers);
        read_opt(d, "n_general", c.data.n_general);
        read_opt(d, "n_pretrain", c.data.n_pretrain);
        read_opt(d, "seed", c.data.seed);
    }
    if (j.contains("model")) lm::from_json(j.at("model"), c.model);
    if (j.contains("pretrain")) dpsgd::from_json(j.at("pretrain"), c.pretrain);
    if (j.contains("train")) dpsgd::from_json(j.at("train"), c.train);
    if (j.contains("privacy")) {
        const auto& p = j.at("privacy");
        if (p.contains("sweep_epsilons")) {
            c.privacy.sweep_epsilons.clear();
            for (const auto& e : p.at("sweep_epsilons")) c.privacy.sweep_epsilons.push_back(number_from_json(e));
        }
        if (p.contains("delta")) c.privacy.delta = number_from_json(p.at("delta"));
        if (p.contains("conversion"))
            c.privacy.conversion = accountant::conversion_from_string(p.at("conversion").get<std::string>());
        if (p.contains("thresholds")) gauge::from_json(p.at("thresholds"), c.privacy.thresholds);
        if (p.contains("schedule")) gauge::from_json(p.at("schedule"), c.privacy.schedule);
    }
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    read_opt(j, "workers", c.workers);
    read_opt(j, "verbose", c.verbose);
    c.train.delta = c.privacy.delta;
    return c;
}

json config_to_json(const RunConfig& c) {
    json eps = json::array();
    for (double e : c.privacy.sweep_epsilons) eps.push_back(number_to_json(e));
    return json{
        {"data",
         {{"n_records", c.data.n_records},
          {"n_members", c.data.n_members},
          {"n_nonmembers", c.data.n_nonmembers},
          {"n_general", c.data.n_general},
          {"n_pretrain", c.data.n_pretrain},
          {"seed", c.data.seed}}},
        {"model", c.model},
        {"pretrain", c.pretrain},
        {"train", c.train},
        {"privacy",
         {{"sweep_epsilons", eps},
          {"delta", c.privacy.delta},
          {"conversion", accountant::to_string(c.privacy.conversion)},
          {"thresholds", c.privacy.thresholds},
          {"schedule", c.privacy.schedule}}},
        {"output_dir", c.output_dir.string()},
        {"workers", c.workers},
        {"verbose", c.verbose},
    };
}

RunConfig load_config(const fs::path& path) { return config_from_json(read_json(path)); }

void apply_env_overrides(RunConfig& cfg) {
    if (const char* dir = std::getenv(kOutputDirEnv); dir != nullptr && *dir != '\0') cfg.output_dir = dir;
}

// ---- corpora ----

std::string dataset_hash(const Corpora& c) {
    std::string cat = io::hash_lines(c.split.members) + io::hash_lines(c.split.nonmembers) +
                      io::hash_lines(c.general.sentences) + io::hash_lines(c.pretrain);
    return io::sha256_hex(cat);
}

Corpora build_corpora(const DataConfig& d) {
    Corpora c;
    const auto records = synthgen::generate_records(d.n_records, d.seed);
    c.split = synthgen::split_corpus(records, d.n_members, d.n_nonmembers, d.seed);
    c.general = synthgen::generate_general_corpus(d.n_general, d.seed);
    c.pretrain = synthgen::generate_pretrain_corpus(d.n_pretrain, d.seed, c.general.sentences);
    c.dataset_hash = dataset_hash(c);
    return c;
}

GenDataResult cmd_gen_data(const RunConfig& cfg) {
    cfg.validate();
    GenDataResult out{build_corpora(cfg.data), data_dir(cfg) / "data_manifest.json"};
    const auto& c = out.corpora;
    const fs::path dir = data_dir(cfg);
    io::write_lines(dir / "members.txt", c.split.members);
    io::write_lines(dir / "nonmembers.txt", c.split.nonmembers);
    io::write_lines(dir / "general.txt", c.general.sentences);
    io::write_lines(dir / "pretrain.txt", c.pretrain);
    json manifest{
        {"seed", cfg.data.seed},
        {"counts",
         {{"records", cfg.data.n_records},
          {"members", c.split.members.size()},
          {"nonmembers", c.split.nonmembers.size()},
          {"general", c.general.sentences.size()},
          {"pretrain", c.pretrain.size()}}},
        {"hashes",
         {{"members", io::hash_lines(c.split.members)},
          {"nonmembers", io::hash_lines(c.split.nonmembers)},
          {"general", io::hash_lines(c.general.sentences)},
          {"pretrain", io::hash_lines(c.pretrain)}}},
        {"member_sources", c.split.member_sources},
        {"nonmember_sources", c.split.nonmember_sources},
        {"dataset_hash", c.dataset_hash},
    };
    io::atomic_write(out.manifest_path, dump(manifest));
    log(cfg, "wrote " + std::to_string(c.split.members.size()) + " members, " +
                 std::to_string(c.split.nonmembers.size()) + " non-members to " + dir.string());
    return out;
}

Corpora load_corpora(const fs::path& dir) {
    const fs::path manifest_path = dir / "data_manifest.json";
    if (!fs::exists(manifest_path)) throw IoError("missing " + manifest_path.string() + "; run gen-data first");
    const json m = read_json(manifest_path);
    Corpora c;
    c.split.members = io::read_lines(dir / "members.txt");
    c.split.nonmembers = io::read_lines(dir / "nonmembers.txt");
    c.general.sentences = io::read_lines(dir / "general.txt");
    c.pretrain = io::read_lines(dir / "pretrain.txt");
    c.split.member_sources = m.at("member_sources").get<std::vector<std::size_t>>();
    c.split.nonmember_sources = m.at("nonmember_sources").get<std::vector<std::size_t>>();
    c.split.seed = c.general.seed = m.at("seed").get<std::uint64_t>();
    c.dataset_hash = dataset_hash(c);
    if (c.dataset_hash != m.at("dataset_hash").get<std::string>())
        throw IoError("corpus files in " + dir.string() + " do not match their manifest");
    return c;
}

Corpora ensure_corpora(const RunConfig& cfg) {
    const fs::path dir = data_dir(cfg);
    if (fs::exists(dir / "data_manifest.json")) {
        Corpora c = load_corpora(dir);
        if (c.split.seed == cfg.data.seed && c.split.members.size() == cfg.data.n_members &&
            c.split.nonmembers.size() == cfg.data.n_nonmembers && c.general.sentences.size() == cfg.data.n_general &&
            c.pretrain.size() == cfg.data.n_pretrain)
            return c;
        log(cfg, "data in " + dir.string() + " does not match config; regenerating");
    }
    return cmd_gen_data(cfg).corpora;
}

// ---- models ----

lm::ModelParams pretrained_model(const RunConfig& cfg, const Corpora& corpora) {
    json key_doc{{"pretrain_hash", io::hash_lines(corpora.pretrain)}, {"model", cfg.model}, {"train", cfg.pretrain}};
    const std::string key = io::sha256_hex(key_doc.dump()).substr(0, 16);
    const fs::path path = cfg.output_dir / "cache" / ("pretrained-" + key + ".bin");
    if (fs::exists(path) && fs::exists(io::manifest_path_for(path))) {
        log(cfg, "using cached pretrained model " + path.string());
        return io::load_model(path);
    }
    log(cfg, "pretraining on " + std::to_string(corpora.pretrain.size()) + " general sentences");
    dpsgd::TrainConfig t = cfg.pretrain;
    t.dp_enabled = false;
    t.noise.sigma = 0.0;
    auto [params, trace] = dpsgd::train(cfg.model, corpora.pretrain, t);
    io::save_model(path, params);
    log(cfg, "pretraining done in " + fmt(trace.wall_clock_seconds, "%.1f") + " s");
    return params;
}

std::string config_label(std::optional<double> epsilon) {
    if (!epsilon) return "baseline";
    return "dp_eps_" + fmt(*epsilon, "%g");
}

TrainedModel train_model(const RunConfig& cfg, const Corpora& corpora, const lm::ModelParams& initial,
                         std::optional<double> epsilon) {
    TrainedModel out;
    out.label = config_label(epsilon);
    dpsgd::TrainConfig t = cfg.train;
    t.delta = cfg.privacy.delta;
    const auto& members = corpora.split.members;
    if (epsilon) {
        accountant::SamplingConfig sampling{
            std::min(1.0, static_cast<double>(t.batch_size) / static_cast<double>(members.size())),
            t.epochs * dpsgd::steps_per_epoch(members.size(), t.batch_size)};
        out.calibration = accountant::calibrate_sigma({*epsilon, cfg.privacy.delta}, sampling, cfg.privacy.conversion);
        t.dp_enabled = true;
        t.noise.sigma = out.calibration->sigma;
        out.epsilon = *epsilon;
        log(cfg, out.label + ": sigma " + fmt(t.noise.sigma) + " for epsilon " + fmt(*epsilon));
    } else {
        t.dp_enabled = false;
        t.noise.sigma = 0.0;
    }
    auto [params, trace] = dpsgd::train(initial, members, t);
    if (epsilon && out.calibration) {
        // Report the guarantee under the configured conversion.
        trace.epsilon = out.calibration->epsilon_achieved;
        trace.optimal_order = out.calibration->optimal_order;
    }
    out.params = std::move(params);
    out.trace = trace;
    out.model_hash = io::model_hash(out.params);
    log(cfg, out.label + ": trained in " + fmt(trace.wall_clock_seconds, "%.1f") + " s, final loss " +
                 fmt(trace.epoch_losses.empty() ? NAN : trace.epoch_losses.back()));
    return out;
}

TrainOutput cmd_train(const RunConfig& cfg, std::optional<double> epsilon) {
    cfg.validate();
    const Corpora corpora = ensure_corpora(cfg);
    const lm::ModelParams initial = pretrained_model(cfg, corpora);
    TrainOutput out{train_model(cfg, corpora, initial, epsilon), {}, {}};
    out.model_path = models_dir(cfg) / (out.model.label + ".bin");
    out.trace_path = models_dir(cfg) / (out.model.label + ".trace.json");
    io::save_model(out.model_path, out.model.params);
    json trace = out.model.trace;
    trace["model_hash"] = out.model.model_hash;
    trace["dataset_hash"] = corpora.dataset_hash;
    trace["train_config"] = cfg.train;
    if (out.model.calibration) trace["calibration"] = *out.model.calibration;
    io::atomic_write(out.trace_path, dump(trace));
    return out;
}

// ---- attack / utility ----

std::string loss_samples_csv(const std::vector<mia::LossSample>& samples) {
    std::string s = "source_id,is_member,loss\n";
    char buf[96];
    for (const auto& x : samples) {
        std::snprintf(buf, sizeof buf, "%zu,%d,%.17g\n", x.source_id, x.is_member ? 1 : 0, x.loss);
        s += buf;
    }
    return s;
}

AttackOutput cmd_attack(const RunConfig& cfg, const fs::path& model_path, const fs::path& out_json,
                        const std::optional<fs::path>& loss_csv) {
    const Corpora corpora = load_corpora(data_dir(cfg));
    const lm::ModelParams params = io::load_model(model_path);
    AttackOutput out;
    out.samples = mia::collect_losses(params, corpora.split);
    out.result = mia::summarize(out.samples);
    json j = out.result;
    j["model_hash"] = io::model_hash(params);
    j["dataset_hash"] = corpora.dataset_hash;
    io::atomic_write(out_json, dump(j));
    if (loss_csv) io::atomic_write(*loss_csv, loss_samples_csv(out.samples));
    log(cfg, "attack: advantage " + fmt(out.result.advantage) + ", AUROC " + fmt(out.result.auroc));
    return out;
}

gauge::UtilityResult evaluate_utility(const lm::ModelParams& model, double baseline_ppl,
                                      const std::vector<std::string>& general) {
    const auto p = lm::corpus_perplexity(model, general);
    gauge::UtilityResult u = gauge::make_utility(p.ppl, baseline_ppl);
    u.tokens = p.tokens;
    u.per_sentence_ppl = p.per_sentence_ppl;
    return u;
}

gauge::UtilityResult cmd_eval_utility(const RunConfig& cfg, const fs::path& model_path,
                                      const fs::path& baseline_path, const fs::path& out_json) {
    const Corpora corpora = load_corpora(data_dir(cfg));
    const auto baseline = lm::corpus_perplexity(io::load_model(baseline_path), corpora.general.sentences);
    const auto u = evaluate_utility(io::load_model(model_path), baseline.ppl, corpora.general.sentences);
    io::atomic_write(out_json, dump(json(u)));
    log(cfg, "utility: ppl " + fmt(u.ppl) + " vs baseline " + fmt(u.baseline_ppl) + " -> " +
                 fmt(u.utility_score) + "%");
    return u;
}

gauge::UtilityResult cmd_eval_utility_fixture(const fs::path& fixture, const fs::path& out_json) {
    const json f = read_json(fixture);
    const auto u = gauge::make_utility(number_from_json(f.at("ppl")), number_from_json(f.at("baseline_ppl")));
    io::atomic_write(out_json, dump(json(u)));
    return u;
}

// ---- audit / sweep ----

ConfigResult run_configuration(const RunConfig& cfg, const Corpora& corpora, const lm::ModelParams& initial,
                               std::optional<double> epsilon) {
    ConfigResult r;
    r.model = train_model(cfg, corpora, initial, epsilon);
    r.mia = mia::run_mia(r.model.params, corpora.split);
    r.ppl = lm::corpus_perplexity(r.model.params, corpora.general.sentences);
    log(cfg, r.model.label + ": advantage " + fmt(r.mia.advantage) + ", AUROC " + fmt(r.mia.auroc) +
                 ", general ppl " + fmt(r.ppl.ppl));
    return r;
}

namespace {

gauge::Evaluation to_evaluation(const RunConfig& cfg, const ConfigResult& r, double baseline_ppl) {
    gauge::Evaluation e;
    e.privacy = privacy_summary(r.model, cfg);
    e.mia = r.mia;
    e.utility = gauge::make_utility(r.ppl.ppl, baseline_ppl);
    e.utility.tokens = r.ppl.tokens;
    e.utility.per_sentence_ppl = r.ppl.per_sentence_ppl;
    e.model_hash = r.model.model_hash;
    return e;
}

AuditOutput write_report(const RunConfig& cfg, const gauge::AuditReport& report, const std::string& stem) {
    AuditOutput out{report, cfg.output_dir / (stem + ".json"), cfg.output_dir / (stem + ".md")};
    io::atomic_write(out.json_path, gauge::emit_report(report, gauge::ReportFormat::json));
    io::atomic_write(out.markdown_path, gauge::emit_report(report, gauge::ReportFormat::markdown));
    return out;
}

}  // namespace

AuditOutput cmd_audit(const RunConfig& cfg) {
    cfg.validate();
    const Corpora corpora = ensure_corpora(cfg);
    const lm::ModelParams initial = pretrained_model(cfg, corpora);
    const ConfigResult baseline = run_configuration(cfg, corpora, initial, std::nullopt);
    const double baseline_ppl = baseline.ppl.ppl;

    gauge::Evaluator evaluate = [&](double epsilon) {
        return to_evaluation(cfg, run_configuration(cfg, corpora, initial, epsilon), baseline_ppl);
    };
    gauge::AuditReport report = gauge::ceg_loop(evaluate, cfg.privacy.thresholds, cfg.privacy.schedule);
    report.fingerprints.dataset_hash = corpora.dataset_hash;
    dpsgd::TrainConfig effective = cfg.train;
    effective.dp_enabled = report.privacy.sigma > 0.0;
    effective.noise.sigma = report.privacy.sigma;
    report.fingerprints.train_config_json = json(effective).dump();
    log(cfg, "audit verdict: " + gauge::to_string(report.verdict) + " (" + report.termination_reason + ")");
    return write_report(cfg, report, "audit_report");
}

SweepOutput cmd_sweep(const RunConfig& cfg) {
    cfg.validate();
    const Corpora corpora = ensure_corpora(cfg);
    const lm::ModelParams initial = pretrained_model(cfg, corpora);

    std::vector<double> eps = cfg.privacy.sweep_epsilons;
    std::sort(eps.begin(), eps.end(), std::greater<>());
    eps.erase(std::unique(eps.begin(), eps.end()), eps.end());
    std::vector<std::optional<double>> jobs{std::nullopt};
    for (double e : eps) jobs.emplace_back(e);

    SweepOutput out;
    out.results.resize(jobs.size());
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t n_workers =
        std::min<std::size_t>(jobs.size(), cfg.workers > 0 ? static_cast<std::size_t>(cfg.workers) : hw);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();) {
            try {
                out.results[i] = run_configuration(cfg, corpora, initial, jobs[i]);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    const double baseline_ppl = out.results.front().ppl.ppl;
    for (const auto& r : out.results)
        out.points.push_back({r.model.label, r.model.epsilon, r.mia.advantage,
                              gauge::utility_score(r.ppl.ppl, baseline_ppl)});
    out.csv = gauge::emit_pareto_csv(out.points);
    out.csv_path = cfg.output_dir / "pareto.csv";
    io::atomic_write(out.csv_path, out.csv);

    json runs = json::array();
    for (std::size_t i = 0; i < out.results.size(); ++i) {
        const auto& r = out.results[i];
        json t = r.model.trace;
        t.erase("wall_clock_seconds");
        runs.push_back({{"label", r.model.label},
                        {"epsilon", number_to_json(r.model.epsilon)},
                        {"model_hash", r.model.model_hash},
                        {"trace", t},
                        {"mia", r.mia},
                        {"ppl", r.ppl.ppl},
                        {"utility_score", out.points[i].utility_score}});
        io::save_model(models_dir(cfg) / (r.model.label + ".bin"), r.model.params);
    }
    json manifest{{"dataset_hash", corpora.dataset_hash},
                  {"config", config_to_json(cfg)},
                  {"baseline_ppl", baseline_ppl},
                  {"runs", runs},
                  {"pareto_csv_sha256", io::sha256_hex(out.csv)}};
    manifest["config"].erase("output_dir");
    manifest["config"].erase("workers");
    manifest["config"].erase("verbose");
    out.manifest_path = cfg.output_dir / "sweep_manifest.json";
    io::atomic_write(out.manifest_path, dump(manifest));

    // Companion report: the most private configuration that satisfies both thresholds.
    gauge::AuditReport report;
    report.thresholds = cfg.privacy.thresholds;
    report.schedule = cfg.privacy.schedule;
    report.pareto = out.points;
    report.fingerprints.dataset_hash = corpora.dataset_hash;
    report.fingerprints.train_config_json = json(cfg.train).dump();
    const ConfigResult* chosen = nullptr;
    for (auto it = out.results.rbegin(); it != out.results.rend(); ++it) {
        const auto v = gauge::judge(it->mia.advantage, gauge::utility_score(it->ppl.ppl, baseline_ppl),
                                    cfg.privacy.thresholds);
        if (v == gauge::Verdict::accepted) {
            chosen = &*it;
            break;
        }
    }
    const ConfigResult& shown = chosen != nullptr ? *chosen : out.results.back();
    const auto e = to_evaluation(cfg, shown, baseline_ppl);
    report.privacy = e.privacy;
    report.mia = e.mia;
    report.utility = e.utility;
    report.fingerprints.model_hash = e.model_hash;
    if (chosen != nullptr) {
        report.verdict = gauge::Verdict::accepted;
        report.termination_reason = "sweep: " + chosen->model.label + " is the most private acceptable configuration";
    } else {
        report.verdict = gauge::Verdict::infeasible;
        report.termination_reason = "sweep: no configuration satisfies both thresholds";
    }
    out.report_path = write_report(cfg, report, "sweep_report").json_path;
    log(cfg, "sweep done: " + std::to_string(out.points.size()) + " configurations, csv " + out.csv_path.string());
    return out;
}

AuditOutput cmd_report(const RunConfig& cfg, const fs::path& mia_json, const fs::path& utility_json,
                       const std::optional<fs::path>& trace_json) {
    gauge::AuditReport report;
    report.thresholds = cfg.privacy.thresholds;
    report.schedule = cfg.privacy.schedule;
    const json m = read_json(mia_json);
    report.mia = m.get<mia::MiaResult>();
    report.utility = read_json(utility_json).get<gauge::UtilityResult>();
    if (m.contains("model_hash")) report.fingerprints.model_hash = m.at("model_hash").get<std::string>();
    if (m.contains("dataset_hash")) report.fingerprints.dataset_hash = m.at("dataset_hash").get<std::string>();
    if (trace_json) {
        const json t = read_json(*trace_json);
        const auto trace = t.get<dpsgd::TrainTrace>();
        TrainedModel tm;
        tm.trace = trace;
        tm.epsilon = trace.dp_enabled ? trace.epsilon : gauge::kNonPrivate;
        report.privacy = privacy_summary(tm, cfg);
        if (t.contains("train_config")) report.fingerprints.train_config_json = t.at("train_config").dump();
    }
    report.verdict = gauge::judge(report.mia.advantage, report.utility.utility_score, cfg.privacy.thresholds);
    report.termination_reason = "single evaluation";
    auto out = write_report(cfg, report, "report");
    log(cfg, "report verdict: " + gauge::to_string(report.verdict));
    return out;
}

}  // namespace llmceg::pipeline
