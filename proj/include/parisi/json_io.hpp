#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "parisi/flows.hpp"
#include "parisi/gibbs.hpp"
#include "parisi/gt2d.hpp"
#include "parisi/optimizer.hpp"

namespace parisi {

using json = nlohmann::json;

// {"coeffs": {"2": 0.5, "3": 0.2}}; degrees are decimal-string keys.
MixtureSpec mixture_from_json(const json& j, bool allow_zero = false);
json mixture_to_json(const MixtureSpec& spec);

// {"atoms": [...], "weights": [...]}.
AtomicMeasure measure_from_json(const json& j);
json measure_to_json(const AtomicMeasure& m);

json criterion_to_json(const CriterionReport& rep);
json at_line_to_json(const ATLineReport& rep);
json estimate_to_json(const ParisiEstimate& est);
json certificate_to_json(const BoundCurve& curve);

void write_phi_csv(std::ostream& os, const PhiSolution& phi, const std::string& preamble);
void write_curve_csv(std::ostream& os, const MomentCurve& curve, const std::string& preamble);
void write_bound_csv(std::ostream& os, const BoundCurve& curve, const std::string& preamble);
void write_histogram_csv(std::ostream& os, const OverlapHistogram& hist,
                         const std::string& preamble);

// FNV-1a over the canonical (sorted-key) dump.
std::string config_hash(const json& j);

// Write-then-rename so partial files never appear under the target name.
void write_text_atomic(const std::string& path, const std::string& content);

// Rejects keys outside the allowed set (schema hygiene for configs).
void require_known_keys(const json& j, const std::vector<std::string>& allowed,
                        const std::string& context);

}  // namespace parisi
