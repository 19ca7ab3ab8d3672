#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "aove/methods.hpp"
#include "aove/portfolio.hpp"
#include "aove/realdata.hpp"
#include "aove/synthetic.hpp"
#include "aove/varma.hpp"

namespace aove {

using Json = nlohmann::json;

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kSchemaVersion = 1;

/// Parameter documents. General form:
///   {"p": 1, "q": 1, "phi": [[[..], ..]], "theta": [...], "sigma_eps": [[..], ..]}
/// Symmetric-commutative form:
///   {"family": "symcomm", "theta": 0.4, "basis": [[..]], "lambda_phi": [..], "lambda_sigma": [..]}
struct ParsedParams {
    VarmaParams params;
    std::optional<SymCommParams> symcomm;
};

ParsedParams params_from_json(const Json& doc);
Json params_to_json(const VarmaParams& params);
Json params_to_json(const SymCommParams& params);

/// {"atoms": [{"weight": w, "params": {...}}, ...]}; weights are normalized on load.
DiscretePrior prior_from_json(const Json& doc);
Json prior_to_json(const DiscretePrior& prior);

/// {"mu0": .., "mu1": .., "mu2": .., "e": [..], "x0": [..]}
PortfolioSpec spec_from_json(const Json& doc);
Json spec_to_json(const PortfolioSpec& spec);

Json read_json_file(const std::string& path);

/// Sample files: optional '#' comment lines, a header row y1,...,yn, then one row per time step.
SamplePath read_sample_csv(const std::string& path);
void write_sample_csv(std::ostream& out, const SamplePath& y);

/// Defaults filled in for any key missing from the "synthetic" / "real" sections.
/// Every schema problem is collected into one ConfigError.
SyntheticConfig synthetic_config_from_json(const Json& doc);
RealDataConfig real_config_from_json(const Json& doc);
std::vector<Method> methods_from_json(const Json& section, const std::vector<Method>& fallback);

Json synthetic_config_to_json(const SyntheticConfig& config);
Json real_config_to_json(const RealDataConfig& config);

/// FNV-1a digest (hex) of the compact serialization of a resolved config.
std::string config_digest(const Json& resolved);

/// '#'-prefixed lines: tool version, config digest, seed.
std::string output_header(const std::string& digest, std::uint64_t seed);

}  // namespace aove
