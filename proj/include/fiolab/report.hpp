#pragma once

#include <string>
#include <vector>

#include "fiolab/bounds.hpp"
#include "fiolab/dyadic.hpp"
#include "fiolab/normlab.hpp"
#include "fiolab/oscint.hpp"
#include "fiolab/symbols.hpp"
#include "json.hpp"

namespace fiolab {

using Json = nlohmann::ordered_json;

/// Exponents: numbers, or the string "inf".
Json exponent_json(double p);

Json to_json(const ClassTag& tag);
Json to_json(const Verdict& verdict);
Json to_json(const ThresholdReport& report);
Json to_json(const NormSweepRecord& record);
Json to_json(const ExperimentReport& report);
Json to_json(const SeminormEstimate& estimate);
Json to_json(const PhaseReport& report);
Json to_json(const std::vector<LevelReport>& levels);
Json to_json(const KernelReport& report);
/// Coefficient norms and fit; coefficient fields themselves go to CSV.
Json to_json(const PeriodizationResult& result);
Json to_json(const NonstationaryReport& report);
Json to_json(const TTStarReport& report);
Json to_json(const LineFit& fit);

/// Two-space indented text with a trailing newline; identical inputs give identical bytes.
std::string dump_report(const Json& report);

}  // namespace fiolab
