#pragma once

// End-to-end orchestration behind the command-line tool: configuration,
// corpus files, pretraining cache, training runs, attack, utility, audit loop
// and multi-epsilon sweep. Every function is deterministic in its config.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmceg/accountant.hpp"
#include "llmceg/dpsgd.hpp"
#include "llmceg/gauge.hpp"
#include "llmceg/lm.hpp"
#include "llmceg/mia.hpp"
#include "llmceg/synthgen.hpp"

namespace llmceg::pipeline {

namespace fs = std::filesystem;

inline constexpr const char* kOutputDirEnv = "LLMCEG_OUTPUT_DIR";

struct DataConfig {
    std::size_t n_records = 500;
    std::size_t n_members = 300;
    std::size_t n_nonmembers = 200;
    std::size_t n_general = 50;
    std::size_t n_pretrain = 500;
    std::uint64_t seed = 42;
};

struct PrivacyConfig {
    std::vector<double> sweep_epsilons{8.0, 2.0, 0.5};
    double delta = 1e-5;
    accountant::Conversion conversion = accountant::Conversion::improved;
    gauge::Thresholds thresholds{};
    gauge::EpsilonSchedule schedule{};
};

struct RunConfig {
    DataConfig data;
    lm::ModelConfig model;
    dpsgd::TrainConfig pretrain;  // stage A, non-private, general corpus
    dpsgd::TrainConfig train;     // stage B, member corpus
    PrivacyConfig privacy;
    fs::path output_dir = "runs/default";
    int workers = 0;  // sweep parallelism; 0 = hardware concurrency
    bool verbose = true;

    // Throws ParameterError / SizeError on invalid nested values.
    void validate() const;
};

RunConfig default_config();
// Defaults overlaid with every field present in the document.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& cfg);
RunConfig load_config(const fs::path& path);
// Applies LLMCEG_OUTPUT_DIR when set.
void apply_env_overrides(RunConfig& cfg);

struct Corpora {
    synthgen::SplitCorpus split;
    synthgen::GeneralCorpus general;
    std::vector<std::string> pretrain;
    std::string dataset_hash;
};

Corpora build_corpora(const DataConfig& data);
std::string dataset_hash(const Corpora& c);

struct GenDataResult {
    Corpora corpora;
    fs::path manifest_path;
};

// Writes members.txt, nonmembers.txt, general.txt, pretrain.txt and data_manifest.json.
GenDataResult cmd_gen_data(const RunConfig& cfg);
// Reads the corpus files written by cmd_gen_data.
Corpora load_corpora(const fs::path& data_dir);
// Loads corpora from output_dir/data, generating them first when absent.
Corpora ensure_corpora(const RunConfig& cfg);

// Stage-A pretrained parameters, cached under output_dir/cache by content key.
lm::ModelParams pretrained_model(const RunConfig& cfg, const Corpora& corpora);

struct TrainedModel {
    std::string label;
    double epsilon = gauge::kNonPrivate;
    lm::ModelParams params;
    dpsgd::TrainTrace trace;
    std::optional<accountant::Calibration> calibration;
    std::string model_hash;
};

std::string config_label(std::optional<double> epsilon);

// Fine-tunes from `initial`; epsilon == nullopt trains without privacy.
TrainedModel train_model(const RunConfig& cfg, const Corpora& corpora, const lm::ModelParams& initial,
                         std::optional<double> epsilon);

struct TrainOutput {
    TrainedModel model;
    fs::path model_path;
    fs::path trace_path;
};

TrainOutput cmd_train(const RunConfig& cfg, std::optional<double> epsilon);

struct AttackOutput {
    mia::MiaResult result;
    std::vector<mia::LossSample> samples;
};

AttackOutput cmd_attack(const RunConfig& cfg, const fs::path& model_path, const fs::path& out_json,
                        const std::optional<fs::path>& loss_csv);

std::string loss_samples_csv(const std::vector<mia::LossSample>& samples);

gauge::UtilityResult evaluate_utility(const lm::ModelParams& model, double baseline_ppl,
                                      const std::vector<std::string>& general);
gauge::UtilityResult cmd_eval_utility(const RunConfig& cfg, const fs::path& model_path,
                                      const fs::path& baseline_path, const fs::path& out_json);
// Utility from stored perplexities: {"ppl": ..., "baseline_ppl": ...}.
gauge::UtilityResult cmd_eval_utility_fixture(const fs::path& fixture, const fs::path& out_json);

struct AuditOutput {
    gauge::AuditReport report;
    fs::path json_path;
    fs::path markdown_path;
};

AuditOutput cmd_audit(const RunConfig& cfg);

// Evaluation of one configuration during an audit or sweep.
struct ConfigResult {
    TrainedModel model;
    mia::MiaResult mia;
    lm::CorpusPerplexity ppl;
};

ConfigResult run_configuration(const RunConfig& cfg, const Corpora& corpora, const lm::ModelParams& initial,
                               std::optional<double> epsilon);

struct SweepOutput {
    std::vector<gauge::ParetoPoint> points;
    std::vector<ConfigResult> results;  // baseline first, then epsilons in descending order
    std::string csv;
    fs::path csv_path;
    fs::path manifest_path;
    fs::path report_path;
};

SweepOutput cmd_sweep(const RunConfig& cfg);

// Single-configuration report from stored attack and utility results.
AuditOutput cmd_report(const RunConfig& cfg, const fs::path& mia_json, const fs::path& utility_json,
                       const std::optional<fs::path>& trace_json);

}  // namespace llmceg::pipeline
