#pragma once

// JSON forms of configs and results. Non-finite numbers (the non-private
// epsilon, the -inf/+inf attack thresholds) are written as the strings
// "inf", "-inf" and "nan" so documents stay valid JSON and round-trip exactly.

#include <nlohmann/json.hpp>

#include "llmceg/accountant.hpp"
#include "llmceg/dpsgd.hpp"
#include "llmceg/gauge.hpp"
#include "llmceg/lm.hpp"
#include "llmceg/mia.hpp"

namespace llmceg {

nlohmann::json number_to_json(double v);
double number_from_json(const nlohmann::json& j);

namespace lm {
void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);
}  // namespace lm

namespace dpsgd {
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
void to_json(nlohmann::json& j, const TrainTrace& t);
void from_json(const nlohmann::json& j, TrainTrace& t);
}  // namespace dpsgd

namespace accountant {
void to_json(nlohmann::json& j, const Calibration& c);
}  // namespace accountant

namespace mia {
void to_json(nlohmann::json& j, const MiaResult& r);
void from_json(const nlohmann::json& j, MiaResult& r);
}  // namespace mia

namespace gauge {
void to_json(nlohmann::json& j, const Thresholds& t);
void from_json(const nlohmann::json& j, Thresholds& t);
void to_json(nlohmann::json& j, const EpsilonSchedule& s);
void from_json(const nlohmann::json& j, EpsilonSchedule& s);
void to_json(nlohmann::json& j, const UtilityResult& u);
void from_json(const nlohmann::json& j, UtilityResult& u);
void to_json(nlohmann::json& j, const ParetoPoint& p);
void from_json(const nlohmann::json& j, ParetoPoint& p);
void to_json(nlohmann::json& j, const PrivacySummary& p);
void from_json(const nlohmann::json& j, PrivacySummary& p);
void to_json(nlohmann::json& j, const IterationRecord& r);
void from_json(const nlohmann::json& j, IterationRecord& r);
void to_json(nlohmann::json& j, const AuditReport& r);
void from_json(const nlohmann::json& j, AuditReport& r);
}  // namespace gauge

}  // namespace llmceg
