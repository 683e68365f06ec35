// llmceg: command-line front end for the privacy-utility audit pipeline.
//
// Exit codes: 0 accepted / success, 1 operational error,
// 2 privacy_fail, 3 utility_fail, 4 infeasible.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "llmceg/errors.hpp"
#include "llmceg/gauge.hpp"
#include "llmceg/pipeline.hpp"

namespace pl = llmceg::pipeline;
namespace fs = std::filesystem;

namespace {

struct CommonFlags {
    std::string config;
    std::string output_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> epochs;
    std::optional<double> learning_rate;
    std::optional<int> batch_size;
    std::optional<double> max_grad_norm;
    std::optional<double> delta;
    std::optional<double> t_p;
    std::optional<double> t_u;
    std::optional<int> workers;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("-c,--config", f.config, "JSON run config")->check(CLI::ExistingFile);
    cmd->add_option("-o,--output-dir", f.output_dir, "Output directory (overrides config and LLMCEG_OUTPUT_DIR)");
    cmd->add_option("--seed", f.seed, "Data, init and shuffle seed");
    cmd->add_option("--epochs", f.epochs, "Fine-tuning epochs");
    cmd->add_option("--lr", f.learning_rate, "Fine-tuning learning rate");
    cmd->add_option("--batch-size", f.batch_size, "Fine-tuning batch size");
    cmd->add_option("--max-grad-norm", f.max_grad_norm, "Per-sample clipping norm");
    cmd->add_option("--delta", f.delta, "Target delta");
    cmd->add_option("--max-advantage", f.t_p, "Privacy threshold on attacker advantage");
    cmd->add_option("--min-utility", f.t_u, "Utility threshold, percent of baseline");
    cmd->add_option("--workers", f.workers, "Parallel sweep workers");
    cmd->add_flag("-q,--quiet", f.quiet, "Suppress progress on stderr");
}

pl::RunConfig resolve(const CommonFlags& f) {
    pl::RunConfig cfg = f.config.empty() ? pl::default_config() : pl::load_config(f.config);
    pl::apply_env_overrides(cfg);
    if (!f.output_dir.empty()) cfg.output_dir = f.output_dir;
    if (f.seed) {
        cfg.data.seed = *f.seed;
        cfg.model.seed = *f.seed;
        cfg.train.seed = *f.seed;
        cfg.pretrain.seed = *f.seed;
    }
    if (f.epochs) cfg.train.epochs = *f.epochs;
    if (f.learning_rate) cfg.train.learning_rate = *f.learning_rate;
    if (f.batch_size) cfg.train.batch_size = *f.batch_size;
    if (f.max_grad_norm) cfg.train.clip.max_grad_norm = *f.max_grad_norm;
    if (f.delta) cfg.privacy.delta = cfg.train.delta = *f.delta;
    if (f.t_p) cfg.privacy.thresholds.t_p = *f.t_p;
    if (f.t_u) cfg.privacy.thresholds.t_u = *f.t_u;
    if (f.workers) cfg.workers = *f.workers;
    if (f.quiet) cfg.verbose = false;
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Privacy-utility audit for small causal language models"};
    app.require_subcommand(1);

    CommonFlags flags;

    auto* gen = app.add_subcommand("gen-data", "Generate member, non-member and general corpora");
    add_common(gen, flags);

    auto* train = app.add_subcommand("train", "Fine-tune one model, with or without DP-SGD");
    add_common(train, flags);
    bool dp = false;
    double epsilon = 8.0;
    train->add_flag("--dp,!--no-dp", dp, "Train with DP-SGD");
    train->add_option("--epsilon", epsilon, "Target epsilon when --dp is set")->check(CLI::PositiveNumber);

    auto* attack = app.add_subcommand("attack", "Run the loss-threshold membership attack");
    add_common(attack, flags);
    std::string model_path, attack_out, loss_csv;
    attack->add_option("--model", model_path, "Model .bin")->required()->check(CLI::ExistingFile);
    attack->add_option("--out", attack_out, "Result JSON (default <output>/mia.json)");
    attack->add_option("--losses-csv", loss_csv, "Write per-sample losses");

    auto* util = app.add_subcommand("eval-utility", "Perplexity utility against a baseline model");
    add_common(util, flags);
    std::string util_model, util_baseline, util_out, util_fixture;
    util->add_option("--model", util_model, "Model .bin")->check(CLI::ExistingFile);
    util->add_option("--baseline", util_baseline, "Non-private baseline .bin")->check(CLI::ExistingFile);
    util->add_option("--ppl-fixture", util_fixture, "JSON with ppl and baseline_ppl")->check(CLI::ExistingFile);
    util->add_option("--out", util_out, "Result JSON (default <output>/utility.json)");

    auto* audit = app.add_subcommand("audit", "Run the epsilon feedback loop and write the audit report");
    add_common(audit, flags);
    std::optional<double> initial_epsilon;
    audit->add_option("--initial-epsilon", initial_epsilon, "Starting epsilon")->check(CLI::PositiveNumber);

    auto* sweep = app.add_subcommand("sweep", "Baseline plus every configured epsilon; Pareto CSV");
    add_common(sweep, flags);
    std::vector<double> sweep_eps;
    sweep->add_option("--epsilons", sweep_eps, "Epsilons to sweep")->delimiter(',');

    auto* report = app.add_subcommand("report", "Verdict and report from stored attack and utility results");
    add_common(report, flags);
    std::string rep_mia, rep_util, rep_trace;
    report->add_option("--mia", rep_mia, "Attack JSON")->required()->check(CLI::ExistingFile);
    report->add_option("--utility", rep_util, "Utility JSON")->required()->check(CLI::ExistingFile);
    report->add_option("--trace", rep_trace, "Training trace JSON")->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        pl::RunConfig cfg = resolve(flags);
        if (gen->parsed()) {
            const auto r = pl::cmd_gen_data(cfg);
            std::cout << r.manifest_path.string() << '\n';
        } else if (train->parsed()) {
            const auto r = pl::cmd_train(cfg, dp ? std::optional<double>(epsilon) : std::nullopt);
            std::cout << r.model_path.string() << '\n';
        } else if (attack->parsed()) {
            const fs::path out = attack_out.empty() ? cfg.output_dir / "mia.json" : fs::path(attack_out);
            std::optional<fs::path> csv;
            if (!loss_csv.empty()) csv = loss_csv;
            pl::cmd_attack(cfg, model_path, out, csv);
            std::cout << out.string() << '\n';
        } else if (util->parsed()) {
            const fs::path out = util_out.empty() ? cfg.output_dir / "utility.json" : fs::path(util_out);
            if (!util_fixture.empty()) {
                pl::cmd_eval_utility_fixture(util_fixture, out);
            } else {
                if (util_model.empty() || util_baseline.empty())
                    throw llmceg::ParameterError("eval-utility needs --model and --baseline, or --ppl-fixture");
                pl::cmd_eval_utility(cfg, util_model, util_baseline, out);
            }
            std::cout << out.string() << '\n';
        } else if (audit->parsed()) {
            if (initial_epsilon) cfg.privacy.schedule.epsilon_0 = *initial_epsilon;
            cfg.validate();
            const auto r = pl::cmd_audit(cfg);
            std::cout << r.json_path.string() << '\n';
            return llmceg::gauge::exit_code(r.report.verdict);
        } else if (sweep->parsed()) {
            if (!sweep_eps.empty()) cfg.privacy.sweep_epsilons = sweep_eps;
            cfg.validate();
            const auto r = pl::cmd_sweep(cfg);
            std::cout << r.csv_path.string() << '\n';
        } else if (report->parsed()) {
            std::optional<fs::path> trace;
            if (!rep_trace.empty()) trace = rep_trace;
            const auto r = pl::cmd_report(cfg, rep_mia, rep_util, trace);
            std::cout << r.json_path.string() << '\n';
            return llmceg::gauge::exit_code(r.report.verdict);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
