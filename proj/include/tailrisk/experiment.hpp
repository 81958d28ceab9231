#pragma once

// Declarative experiment configs: strict parsing with defaults materialized,
// the five workflows and the bundled example catalog.

#include <string>
#include <vector>

#include <json.hpp>

#include "tailrisk/dependence.hpp"
#include "tailrisk/distributions.hpp"
#include "tailrisk/engine.hpp"
#include "tailrisk/renewal.hpp"
#include "tailrisk/risk_measures.hpp"
#include "tailrisk/weighted_sums.hpp"

namespace tailrisk {

using Json = nlohmann::json;

/// Validates a raw config and returns it with every default filled in. Unknown keys,
/// missing required keys and wrong types raise ConfigError naming the JSON path.
/// resolve_config(resolve_config(c)) == resolve_config(c).
Json resolve_config(const Json& raw);

/// Parses JSON text; syntax errors raise ConfigError.
Json parse_config_text(const std::string& text);

RunPlan run_plan_from(const Json& resolved);

// Typed builders over resolved blocks.
TailLaw law_from_json(const Json& j);
Copula copula_from_json(const Json& j);
WeightSpec weight_from_json(const Json& j);
BivariateSumSpec sum_spec_from_json(const Json& j);
RenewalSpec renewal_spec_from_json(const Json& j);
BackgroundRiskModel model_from_json(const Json& j);
Distortion distortion_from_json(const Json& j);

struct ExperimentOutput {
  std::string csv;  // header row, LF line endings
  Json results;
};

/// Runs a resolved config.
ExperimentOutput run_experiment(const Json& resolved);

struct CatalogEntry {
  std::string id;
  std::string description;
  Json config;
};

const std::vector<CatalogEntry>& example_catalog();

/// Shortest round-trip decimal form used in CSV output.
std::string format_number(double v);

}  // namespace tailrisk
