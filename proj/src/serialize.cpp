#include "llmceg/serialize.hpp"

#include <cmath>
#include <limits>

#include "llmceg/errors.hpp"

namespace llmceg {

using nlohmann::json;

namespace {

template <typename T>
void read_opt(const json& j, const char* key, T& field) {
    if (auto it = j.find(key); it != j.end()) it->get_to(field);
}

void read_num(const json& j, const char* key, double& field) {
    if (auto it = j.find(key); it != j.end()) field = number_from_json(*it);
}

}  // namespace

json number_to_json(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

double number_from_json(const json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto& s = j.get_ref<const std::string&>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    throw IoError("expected a number, got " + j.dump());
}

namespace lm {

void to_json(json& j, const ModelConfig& c) {
    j = {{"d_model", c.d_model},
         {"n_layers", c.n_layers},
         {"n_heads", c.n_heads},
         {"context_len", c.context_len},
         {"seed", c.seed}};
}

void from_json(const json& j, ModelConfig& c) {
    read_opt(j, "d_model", c.d_model);
    read_opt(j, "n_layers", c.n_layers);
    read_opt(j, "n_heads", c.n_heads);
    read_opt(j, "context_len", c.context_len);
    read_opt(j, "seed", c.seed);
}

}  // namespace lm

namespace dpsgd {

void to_json(json& j, const TrainConfig& c) {
    j = {{"epochs", c.epochs},
         {"batch_size", c.batch_size},
         {"learning_rate", c.learning_rate},
         {"optimizer", to_string(c.optimizer)},
         {"weight_decay", c.weight_decay},
         {"beta1", c.beta1},
         {"beta2", c.beta2},
         {"adam_eps", c.adam_eps},
         {"dp_enabled", c.dp_enabled},
         {"max_grad_norm", number_to_json(c.clip.max_grad_norm)},
         {"noise_multiplier", c.noise.sigma},
         {"noise_seed", c.noise.seed},
         {"delta", c.delta},
         {"seed", c.seed}};
}

void from_json(const json& j, TrainConfig& c) {
    read_opt(j, "epochs", c.epochs);
    read_opt(j, "batch_size", c.batch_size);
    read_num(j, "learning_rate", c.learning_rate);
    if (auto it = j.find("optimizer"); it != j.end()) c.optimizer = optimizer_from_string(it->get<std::string>());
    read_num(j, "weight_decay", c.weight_decay);
    read_num(j, "beta1", c.beta1);
    read_num(j, "beta2", c.beta2);
    read_num(j, "adam_eps", c.adam_eps);
    read_opt(j, "dp_enabled", c.dp_enabled);
    read_num(j, "max_grad_norm", c.clip.max_grad_norm);
    read_num(j, "noise_multiplier", c.noise.sigma);
    read_opt(j, "noise_seed", c.noise.seed);
    read_num(j, "delta", c.delta);
    read_opt(j, "seed", c.seed);
}

void to_json(json& j, const TrainTrace& t) {
    json losses = json::array();
    for (double l : t.epoch_losses) losses.push_back(l);
    j = {{"epoch_losses", losses},
         {"steps", t.steps},
         {"sigma", t.sigma},
         {"clip_norm", number_to_json(t.clip_norm)},
         {"epsilon", number_to_json(t.epsilon)},
         {"delta", t.delta},
         {"q", t.q},
         {"optimal_order", t.optimal_order},
         {"dp_enabled", t.dp_enabled},
         {"seed", t.seed},
         {"noise_seed", t.noise_seed},
         {"wall_clock_seconds", t.wall_clock_seconds}};
}

void from_json(const json& j, TrainTrace& t) {
    read_opt(j, "epoch_losses", t.epoch_losses);
    read_opt(j, "steps", t.steps);
    read_num(j, "sigma", t.sigma);
    read_num(j, "clip_norm", t.clip_norm);
    read_num(j, "epsilon", t.epsilon);
    read_num(j, "delta", t.delta);
    read_num(j, "q", t.q);
    read_num(j, "optimal_order", t.optimal_order);
    read_opt(j, "dp_enabled", t.dp_enabled);
    read_opt(j, "seed", t.seed);
    read_opt(j, "noise_seed", t.noise_seed);
    read_num(j, "wall_clock_seconds", t.wall_clock_seconds);
}

}  // namespace dpsgd

namespace accountant {

void to_json(json& j, const Calibration& c) {
    j = {{"sigma", c.sigma},
         {"epsilon_target", number_to_json(c.epsilon_target)},
         {"epsilon_achieved", number_to_json(c.epsilon_achieved)},
         {"delta", c.delta},
         {"q", c.q},
         {"steps", c.steps},
         {"optimal_order", c.optimal_order},
         {"conversion", to_string(c.conversion)}};
}

}  // namespace accountant

namespace mia {

void to_json(json& j, const MiaResult& r) {
    j = {{"loss_gap", r.loss_gap},
         {"accuracy", r.accuracy},
         {"raw_accuracy", r.raw_accuracy},
         {"advantage", r.advantage},
         {"auroc", r.auroc},
         {"best_threshold", number_to_json(r.best_threshold)},
         {"n_members", r.n_members},
         {"n_nonmembers", r.n_nonmembers}};
}

void from_json(const json& j, MiaResult& r) {
    r.loss_gap = number_from_json(j.at("loss_gap"));
    r.accuracy = number_from_json(j.at("accuracy"));
    read_num(j, "raw_accuracy", r.raw_accuracy);
    r.advantage = number_from_json(j.at("advantage"));
    r.auroc = number_from_json(j.at("auroc"));
    read_num(j, "best_threshold", r.best_threshold);
    j.at("n_members").get_to(r.n_members);
    j.at("n_nonmembers").get_to(r.n_nonmembers);
}

}  // namespace mia

namespace gauge {

void to_json(json& j, const Thresholds& t) {
    j = {{"t_p", t.t_p}, {"t_u", t.t_u}, {"tolerance", t.tolerance}};
}

void from_json(const json& j, Thresholds& t) {
    read_num(j, "t_p", t.t_p);
    read_num(j, "t_u", t.t_u);
    read_num(j, "tolerance", t.tolerance);
}

void to_json(json& j, const EpsilonSchedule& s) {
    j = {{"epsilon_0", s.epsilon_0},
         {"decrease_factor", s.decrease_factor},
         {"increase_factor", s.increase_factor},
         {"max_iterations", s.max_iterations},
         {"epsilon_min", s.epsilon_min},
         {"epsilon_max", s.epsilon_max}};
}

void from_json(const json& j, EpsilonSchedule& s) {
    read_num(j, "epsilon_0", s.epsilon_0);
    read_num(j, "decrease_factor", s.decrease_factor);
    read_num(j, "increase_factor", s.increase_factor);
    read_opt(j, "max_iterations", s.max_iterations);
    read_num(j, "epsilon_min", s.epsilon_min);
    read_num(j, "epsilon_max", s.epsilon_max);
}

void to_json(json& j, const UtilityResult& u) {
    j = {{"ppl", u.ppl},
         {"baseline_ppl", u.baseline_ppl},
         {"utility_score", u.utility_score},
         {"tokens", u.tokens},
         {"per_sentence_ppl", u.per_sentence_ppl}};
}

void from_json(const json& j, UtilityResult& u) {
    u.ppl = number_from_json(j.at("ppl"));
    u.baseline_ppl = number_from_json(j.at("baseline_ppl"));
    u.utility_score = number_from_json(j.at("utility_score"));
    read_opt(j, "tokens", u.tokens);
    read_opt(j, "per_sentence_ppl", u.per_sentence_ppl);
}

void to_json(json& j, const ParetoPoint& p) {
    j = {{"label", p.label},
         {"epsilon", number_to_json(p.epsilon)},
         {"advantage", p.advantage},
         {"utility_score", p.utility_score}};
}

void from_json(const json& j, ParetoPoint& p) {
    j.at("label").get_to(p.label);
    p.epsilon = number_from_json(j.at("epsilon"));
    p.advantage = number_from_json(j.at("advantage"));
    p.utility_score = number_from_json(j.at("utility_score"));
}

void to_json(json& j, const PrivacySummary& p) {
    j = {{"epsilon_target", number_to_json(p.epsilon_target)},
         {"epsilon_achieved", number_to_json(p.epsilon_achieved)},
         {"delta", p.delta},
         {"sigma", p.sigma},
         {"C", number_to_json(p.clip_norm)},
         {"q", p.q},
         {"steps", p.steps},
         {"optimal_order", p.optimal_order},
         {"conversion", p.conversion},
         {"sampling_note", p.sampling_note}};
}

void from_json(const json& j, PrivacySummary& p) {
    p.epsilon_target = number_from_json(j.at("epsilon_target"));
    p.epsilon_achieved = number_from_json(j.at("epsilon_achieved"));
    p.delta = number_from_json(j.at("delta"));
    p.sigma = number_from_json(j.at("sigma"));
    p.clip_norm = number_from_json(j.at("C"));
    p.q = number_from_json(j.at("q"));
    j.at("steps").get_to(p.steps);
    read_num(j, "optimal_order", p.optimal_order);
    read_opt(j, "conversion", p.conversion);
    read_opt(j, "sampling_note", p.sampling_note);
}

void to_json(json& j, const IterationRecord& r) {
    j = {{"iteration", r.iteration},
         {"epsilon", number_to_json(r.epsilon)},
         {"sigma", r.sigma},
         {"advantage", r.advantage},
         {"auroc", r.auroc},
         {"ppl", r.ppl},
         {"utility_score", r.utility_score},
         {"privacy_ok", r.privacy_ok},
         {"utility_ok", r.utility_ok},
         {"action", r.action},
         {"model_hash", r.model_hash}};
}

void from_json(const json& j, IterationRecord& r) {
    j.at("iteration").get_to(r.iteration);
    r.epsilon = number_from_json(j.at("epsilon"));
    r.sigma = number_from_json(j.at("sigma"));
    r.advantage = number_from_json(j.at("advantage"));
    r.auroc = number_from_json(j.at("auroc"));
    r.ppl = number_from_json(j.at("ppl"));
    r.utility_score = number_from_json(j.at("utility_score"));
    j.at("privacy_ok").get_to(r.privacy_ok);
    j.at("utility_ok").get_to(r.utility_ok);
    j.at("action").get_to(r.action);
    read_opt(j, "model_hash", r.model_hash);
}

void to_json(json& j, const AuditReport& r) {
    json train_cfg = r.fingerprints.train_config_json.empty() ? json::object()
                                                              : json::parse(r.fingerprints.train_config_json);
    j = {
        {"format", "llmceg-audit-report-v1"},
        {"verdict", to_string(r.verdict)},
        {"termination_reason", r.termination_reason},
        {"thresholds", r.thresholds},
        {"schedule", r.schedule},
        {"privacy", r.privacy},
        {"mia", r.mia},
        {"utility", r.utility},
        {"fingerprints",
         {{"dataset_hash", r.fingerprints.dataset_hash},
          {"model_hash", r.fingerprints.model_hash},
          {"train_config", train_cfg}}},
        {"iterations", r.iterations},
        {"pareto", r.pareto},
        // Flat copies of the headline numbers for quick consumption.
        {"epsilon_achieved", number_to_json(r.privacy.epsilon_achieved)},
        {"delta", r.privacy.delta},
        {"advantage", r.mia.advantage},
        {"auroc", r.mia.auroc},
        {"ppl", r.utility.ppl},
        {"utility_score", r.utility.utility_score},
        {"general_ppl_vs_baseline",
         {{"ppl", r.utility.ppl},
          {"baseline_ppl", r.utility.baseline_ppl},
          {"not_worse_than_baseline", r.utility.ppl <= r.utility.baseline_ppl}}},
    };
}

void from_json(const json& j, AuditReport& r) {
    r.verdict = verdict_from_string(j.at("verdict").get<std::string>());
    read_opt(j, "termination_reason", r.termination_reason);
    j.at("thresholds").get_to(r.thresholds);
    j.at("schedule").get_to(r.schedule);
    j.at("privacy").get_to(r.privacy);
    j.at("mia").get_to(r.mia);
    j.at("utility").get_to(r.utility);
    const json& fp = j.at("fingerprints");
    fp.at("dataset_hash").get_to(r.fingerprints.dataset_hash);
    fp.at("model_hash").get_to(r.fingerprints.model_hash);
    const json& tc = fp.at("train_config");
    r.fingerprints.train_config_json = tc.empty() ? std::string() : tc.dump();
    read_opt(j, "iterations", r.iterations);
    read_opt(j, "pareto", r.pareto);
}

}  // namespace gauge

}  // namespace llmceg
