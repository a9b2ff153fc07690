#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "reppi/data.hpp"
#include "reppi/simulation.hpp"

namespace reppi {

// Deterministic serializers: identical inputs produce identical bytes.
// Estimate reports carry run metadata in a separate "meta" block; the
// "results" block is the comparable payload.

std::string estimate_report_json(
    const std::vector<std::pair<std::string, std::string>>& meta,
    const std::vector<std::pair<std::string, EstimateResult>>& results);

// Flat table: method,coordinate,theta,sigma_jj,ci_lower,ci_upper,level.
std::string estimate_report_csv(
    const std::vector<std::pair<std::string, EstimateResult>>& results);

// Parses the "results" block back; theta and sigma round-trip exactly.
std::map<std::string, EstimateResult> parse_estimate_report_json(
    const std::string& text);

std::string study_report_json(const StudyReport& report);

// Same columns as the JSON rows.
std::string study_report_csv(const StudyReport& report);

}  // namespace reppi
