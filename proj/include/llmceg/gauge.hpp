#pragma once

// The privacy-utility feedback loop: utility scoring, threshold checks, the
// epsilon search loop, Pareto analysis and the privacy audit report.

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "llmceg/mia.hpp"

namespace llmceg::gauge {

inline constexpr double kNonPrivate = std::numeric_limits<double>::infinity();

struct Thresholds {
    double t_p = 0.10;        // max attacker advantage
    double t_u = 100.0;       // min utility score, percent of baseline
    double tolerance = 0.01;  // band added to t_p when judging advantage

    void validate() const;
    bool operator==(const Thresholds&) const = default;
};

struct UtilityResult {
    double ppl = 0.0;
    double baseline_ppl = 0.0;
    double utility_score = 0.0;  // percent
    std::size_t tokens = 0;
    std::vector<double> per_sentence_ppl;

    bool operator==(const UtilityResult&) const = default;
};

struct ParetoPoint {
    std::string label;
    double epsilon = kNonPrivate;
    double advantage = 0.0;
    double utility_score = 0.0;

    bool operator==(const ParetoPoint&) const = default;
};

enum class Verdict { accepted, privacy_fail, utility_fail, infeasible };

std::string to_string(Verdict v);
Verdict verdict_from_string(const std::string& s);
// 0 accepted, 2 privacy_fail, 3 utility_fail, 4 infeasible.
int exit_code(Verdict v);

struct EpsilonSchedule {
    double epsilon_0 = 8.0;
    double decrease_factor = 0.5;
    double increase_factor = 2.0;
    int max_iterations = 12;
    double epsilon_min = 0.05;
    double epsilon_max = 64.0;

    void validate() const;
    bool operator==(const EpsilonSchedule&) const = default;
};

struct PrivacySummary {
    double epsilon_target = kNonPrivate;
    double epsilon_achieved = kNonPrivate;
    double delta = 0.0;
    double sigma = 0.0;
    double clip_norm = 0.0;
    double q = 0.0;
    long steps = 0;
    double optimal_order = 0.0;
    std::string conversion;
    std::string sampling_note;

    bool operator==(const PrivacySummary&) const = default;
};

// What one trained configuration measured; produced by the injected evaluator.
struct Evaluation {
    PrivacySummary privacy;
    mia::MiaResult mia;
    UtilityResult utility;
    std::string model_hash;
};

struct IterationRecord {
    int iteration = 0;
    double epsilon = 0.0;
    double sigma = 0.0;
    double advantage = 0.0;
    double auroc = 0.0;
    double ppl = 0.0;
    double utility_score = 0.0;
    bool privacy_ok = false;
    bool utility_ok = false;
    std::string action;  // accept | decrease_epsilon | increase_epsilon
    std::string model_hash;

    bool operator==(const IterationRecord&) const = default;
};

struct Fingerprints {
    std::string dataset_hash;
    std::string model_hash;
    std::string train_config_json;  // canonical JSON text

    bool operator==(const Fingerprints&) const = default;
};

struct AuditReport {
    Verdict verdict = Verdict::infeasible;
    std::string termination_reason;
    Thresholds thresholds;
    EpsilonSchedule schedule;
    PrivacySummary privacy;
    mia::MiaResult mia;
    UtilityResult utility;
    Fingerprints fingerprints;
    std::vector<IterationRecord> iterations;
    std::vector<ParetoPoint> pareto;  // optional sweep context

    bool operator==(const AuditReport&) const = default;
};

// baseline_ppl / ppl * 100.
double utility_score(double ppl, double baseline_ppl);
UtilityResult make_utility(double ppl, double baseline_ppl);

// advantage <= t_p + tolerance. A zero threshold gets no band.
bool check_acceptable(double advantage, double t_p, double tolerance = 0.01);
bool check_utility(double utility_score, double t_u);
// Single-evaluation verdict: privacy is judged before utility.
Verdict judge(double advantage, double utility_score, const Thresholds& thresholds);
// Recomputes the verdict from the report's own numbers and compares.
bool verdict_consistent(const AuditReport& report);

using Evaluator = std::function<Evaluation(double epsilon)>;

AuditReport ceg_loop(const Evaluator& evaluate, const Thresholds& thresholds, const EpsilonSchedule& schedule);

// p dominates r iff p.advantage <= r.advantage and p.utility >= r.utility with one strict.
bool dominates(const ParetoPoint& p, const ParetoPoint& r);
std::vector<ParetoPoint> pareto_frontier(const std::vector<ParetoPoint>& points);

enum class ReportFormat { json, markdown };

std::string emit_report(const AuditReport& report, ReportFormat format);
AuditReport parse_report_json(const std::string& text);

// label,epsilon,advantage,utility_score,frontier
std::string emit_pareto_csv(const std::vector<ParetoPoint>& points);

}  // namespace llmceg::gauge
