#include "llmceg/gauge.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "llmceg/errors.hpp"
#include "llmceg/serialize.hpp"

namespace llmceg::gauge {

namespace {

// Absorbs floating-point noise in threshold comparisons (e.g. 0.1 + 0.01).
constexpr double kCompareSlack = 1e-12;

bool same_epsilon(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b)); }

std::string fmt(const char* format, double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

std::string epsilon_label(double eps) { return std::isinf(eps) ? "non-private" : fmt("%g", eps); }

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace

void Thresholds::validate() const {
    if (!(t_p >= 0.0 && t_p <= 0.5)) throw ParameterError("t_p must lie in [0, 0.5]");
    if (!(t_u > 0.0)) throw ParameterError("t_u must be positive");
    if (!(tolerance >= 0.0)) throw ParameterError("tolerance must be non-negative");
}

void EpsilonSchedule::validate() const {
    if (!(decrease_factor > 0.0 && decrease_factor < 1.0)) throw ParameterError("decrease_factor must lie in (0, 1)");
    if (!(increase_factor > 1.0)) throw ParameterError("increase_factor must exceed 1");
    if (max_iterations < 1) throw ParameterError("max_iterations must be at least 1");
    if (!(epsilon_min > 0.0 && epsilon_max >= epsilon_min)) throw ParameterError("epsilon bounds must be positive and ordered");
    if (!(epsilon_0 > 0.0)) throw ParameterError("epsilon_0 must be positive");
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::accepted: return "accepted";
        case Verdict::privacy_fail: return "privacy_fail";
        case Verdict::utility_fail: return "utility_fail";
        case Verdict::infeasible: return "infeasible";
    }
    return "infeasible";
}

Verdict verdict_from_string(const std::string& s) {
    if (s == "accepted") return Verdict::accepted;
    if (s == "privacy_fail") return Verdict::privacy_fail;
    if (s == "utility_fail") return Verdict::utility_fail;
    if (s == "infeasible") return Verdict::infeasible;
    throw ParameterError("unknown verdict: " + s);
}

int exit_code(Verdict v) {
    switch (v) {
        case Verdict::accepted: return 0;
        case Verdict::privacy_fail: return 2;
        case Verdict::utility_fail: return 3;
        case Verdict::infeasible: return 4;
    }
    return 1;
}

double utility_score(double ppl, double baseline_ppl) {
    if (!(ppl > 0.0) || !(baseline_ppl > 0.0)) throw ParameterError("perplexities must be positive");
    return baseline_ppl / ppl * 100.0;
}

UtilityResult make_utility(double ppl, double baseline_ppl) {
    UtilityResult u;
    u.ppl = ppl;
    u.baseline_ppl = baseline_ppl;
    u.utility_score = utility_score(ppl, baseline_ppl);
    return u;
}

bool check_acceptable(double advantage, double t_p, double tolerance) {
    const double band = t_p > 0.0 ? tolerance : 0.0;
    return advantage <= t_p + band + kCompareSlack;
}

bool check_utility(double utility_score, double t_u) { return utility_score >= t_u - kCompareSlack; }

Verdict judge(double advantage, double utility, const Thresholds& thresholds) {
    if (!check_acceptable(advantage, thresholds.t_p, thresholds.tolerance)) return Verdict::privacy_fail;
    if (!check_utility(utility, thresholds.t_u)) return Verdict::utility_fail;
    return Verdict::accepted;
}

bool verdict_consistent(const AuditReport& report) {
    const Verdict recomputed = judge(report.mia.advantage, report.utility.utility_score, report.thresholds);
    if (report.verdict == Verdict::infeasible) return recomputed != Verdict::accepted;
    return recomputed == report.verdict;
}

AuditReport ceg_loop(const Evaluator& evaluate, const Thresholds& thresholds, const EpsilonSchedule& schedule) {
    thresholds.validate();
    schedule.validate();

    AuditReport report;
    report.thresholds = thresholds;
    report.schedule = schedule;
    report.verdict = Verdict::infeasible;
    report.termination_reason = "max_iterations reached";

    std::vector<double> visited;
    double epsilon = schedule.epsilon_0;
    for (int it = 0; it < schedule.max_iterations; ++it) {
        if (epsilon < schedule.epsilon_min * (1.0 - 1e-12) || epsilon > schedule.epsilon_max * (1.0 + 1e-12)) {
            report.termination_reason = "epsilon " + fmt("%g", epsilon) + " left bounds [" +
                                        fmt("%g", schedule.epsilon_min) + ", " + fmt("%g", schedule.epsilon_max) + "]";
            return report;
        }
        for (double v : visited) {
            if (same_epsilon(v, epsilon)) {
                report.termination_reason = "oscillation: epsilon " + fmt("%g", epsilon) + " already tested";
                return report;
            }
        }
        visited.push_back(epsilon);

        const Evaluation ev = evaluate(epsilon);
        IterationRecord rec;
        rec.iteration = it + 1;
        rec.epsilon = epsilon;
        rec.sigma = ev.privacy.sigma;
        rec.advantage = ev.mia.advantage;
        rec.auroc = ev.mia.auroc;
        rec.ppl = ev.utility.ppl;
        rec.utility_score = ev.utility.utility_score;
        rec.privacy_ok = check_acceptable(ev.mia.advantage, thresholds.t_p, thresholds.tolerance);
        rec.utility_ok = check_utility(ev.utility.utility_score, thresholds.t_u);
        rec.model_hash = ev.model_hash;

        report.privacy = ev.privacy;
        report.mia = ev.mia;
        report.utility = ev.utility;
        report.fingerprints.model_hash = ev.model_hash;

        if (!rec.privacy_ok) {
            rec.action = "decrease_epsilon";
            report.iterations.push_back(rec);
            epsilon *= schedule.decrease_factor;
            continue;
        }
        if (!rec.utility_ok) {
            // Utility shortfall is the documented trade-off: loosen the budget.
            rec.action = "increase_epsilon";
            report.iterations.push_back(rec);
            epsilon *= schedule.increase_factor;
            continue;
        }
        rec.action = "accept";
        report.iterations.push_back(rec);
        report.verdict = Verdict::accepted;
        report.termination_reason = "thresholds met";
        return report;
    }
    return report;
}

bool dominates(const ParetoPoint& p, const ParetoPoint& r) {
    const bool no_worse = p.advantage <= r.advantage && p.utility_score >= r.utility_score;
    const bool better = p.advantage < r.advantage || p.utility_score > r.utility_score;
    return no_worse && better;
}

std::vector<ParetoPoint> pareto_frontier(const std::vector<ParetoPoint>& points) {
    if (points.empty()) throw PreconditionError("pareto_frontier needs at least one point");
    std::vector<ParetoPoint> out;
    for (const ParetoPoint& p : points) {
        bool dominated = false;
        for (const ParetoPoint& r : points) {
            if (dominates(r, p)) {
                dominated = true;
                break;
            }
        }
        if (!dominated) out.push_back(p);
    }
    return out;
}

std::string emit_pareto_csv(const std::vector<ParetoPoint>& points) {
    const std::vector<ParetoPoint> frontier = pareto_frontier(points);
    std::ostringstream os;
    os << "label,epsilon,advantage,utility_score,frontier\n";
    for (const ParetoPoint& p : points) {
        bool on_frontier = false;
        for (const ParetoPoint& f : frontier) on_frontier = on_frontier || f == p;
        os << csv_field(p.label) << ',' << fmt("%.10g", p.epsilon) << ',' << fmt("%.10g", p.advantage) << ','
           << fmt("%.10g", p.utility_score) << ',' << (on_frontier ? "true" : "false") << '\n';
    }
    return os.str();
}

namespace {

std::string emit_markdown(const AuditReport& r) {
    std::ostringstream os;
    os << "# Privacy Audit Report\n\n";
    os << "**Verdict:** " << to_string(r.verdict) << " (" << r.termination_reason << ")\n\n";

    os << "## Thresholds\n\n";
    os << "| t_p (max advantage) | tolerance | t_u (min utility %) |\n|---|---|---|\n";
    os << "| " << fmt("%.4f", r.thresholds.t_p) << " | " << fmt("%.4f", r.thresholds.tolerance) << " | "
       << fmt("%.2f", r.thresholds.t_u) << " |\n\n";

    os << "## Formal privacy\n\n";
    os << "| epsilon target | epsilon achieved | delta | sigma | C | q | steps | order | conversion |\n";
    os << "|---|---|---|---|---|---|---|---|---|\n";
    os << "| " << epsilon_label(r.privacy.epsilon_target) << " | " << epsilon_label(r.privacy.epsilon_achieved)
       << " | " << fmt("%g", r.privacy.delta) << " | " << fmt("%.4f", r.privacy.sigma) << " | "
       << fmt("%g", r.privacy.clip_norm) << " | " << fmt("%.5f", r.privacy.q) << " | " << r.privacy.steps << " | "
       << fmt("%g", r.privacy.optimal_order) << " | " << r.privacy.conversion << " |\n\n";
    if (!r.privacy.sampling_note.empty()) os << "_" << r.privacy.sampling_note << "_\n\n";

    os << "## Empirical privacy (loss-threshold membership inference)\n\n";
    os << "| loss gap | balanced accuracy | raw accuracy | advantage | AUROC | members | non-members |\n";
    os << "|---|---|---|---|---|---|---|\n";
    os << "| " << fmt("%.4f", r.mia.loss_gap) << " | " << fmt("%.4f", r.mia.accuracy) << " | "
       << fmt("%.4f", r.mia.raw_accuracy) << " | " << fmt("%.4f", r.mia.advantage) << " | "
       << fmt("%.4f", r.mia.auroc) << " | " << r.mia.n_members << " | " << r.mia.n_nonmembers << " |\n\n";

    os << "## Utility\n\n";
    os << "| perplexity | baseline perplexity | utility score % |\n|---|---|---|\n";
    os << "| " << fmt("%.3f", r.utility.ppl) << " | " << fmt("%.3f", r.utility.baseline_ppl) << " | "
       << fmt("%.1f", r.utility.utility_score) << " |\n\n";
    os << "General-corpus perplexity is " << (r.utility.ppl <= r.utility.baseline_ppl ? "not worse" : "worse")
       << " than the non-private baseline.\n\n";

    os << "## Fingerprints\n\n";
    os << "- dataset: `" << r.fingerprints.dataset_hash << "`\n";
    os << "- model: `" << r.fingerprints.model_hash << "`\n";
    if (!r.fingerprints.train_config_json.empty()) os << "- train config: `" << r.fingerprints.train_config_json << "`\n";
    os << "\n";

    if (!r.iterations.empty()) {
        os << "## Iteration history\n\n";
        os << "| # | epsilon | sigma | advantage | AUROC | ppl | utility % | privacy ok | utility ok | action |\n";
        os << "|---|---|---|---|---|---|---|---|---|---|\n";
        for (const IterationRecord& it : r.iterations) {
            os << "| " << it.iteration << " | " << epsilon_label(it.epsilon) << " | " << fmt("%.4f", it.sigma) << " | "
               << fmt("%.4f", it.advantage) << " | " << fmt("%.4f", it.auroc) << " | " << fmt("%.3f", it.ppl) << " | "
               << fmt("%.1f", it.utility_score) << " | " << (it.privacy_ok ? "yes" : "no") << " | "
               << (it.utility_ok ? "yes" : "no") << " | " << it.action << " |\n";
        }
        os << "\n";
    }

    if (!r.pareto.empty()) {
        const std::vector<ParetoPoint> frontier = pareto_frontier(r.pareto);
        os << "## Privacy-utility configurations\n\n";
        os << "| configuration | epsilon | advantage | utility % | Pareto-optimal |\n|---|---|---|---|---|\n";
        for (const ParetoPoint& p : r.pareto) {
            bool on_frontier = false;
            for (const ParetoPoint& f : frontier) on_frontier = on_frontier || f == p;
            os << "| " << p.label << " | " << epsilon_label(p.epsilon) << " | " << fmt("%.3f", p.advantage) << " | "
               << fmt("%.1f", p.utility_score) << " | " << (on_frontier ? "**yes**" : "") << " |\n";
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace

std::string emit_report(const AuditReport& report, ReportFormat format) {
    if (format == ReportFormat::markdown) return emit_markdown(report);
    return nlohmann::json(report).dump(2) + "\n";
}

AuditReport parse_report_json(const std::string& text) {
    try {
        return nlohmann::json::parse(text).get<AuditReport>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("invalid audit report: ") + e.what());
    }
}

}  // namespace llmceg::gauge
