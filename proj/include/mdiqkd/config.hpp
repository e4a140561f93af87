#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "mdiqkd/decoy.hpp"
#include "mdiqkd/simkit.hpp"
#include "mdiqkd/types.hpp"

namespace mdiqkd::config {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kConfigEnvVar = "MDIQKD_CONFIG";

class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class SchemaError : public std::runtime_error {
  public:
    explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

struct RunConfig {
    SystemSpec system;
    ProtocolParams protocol;
    bool optimize_params = false;  // protocol section said "optimize"
    std::uint64_t n_pairs = 1'000'000'000;
    std::uint64_t seed = 1;
    bool expected_mode = false;
    decoy::FluctuationPolicy fluctuation;
    decoy::AnalysisPolicy analysis;
    int starts = 32;
    std::uint64_t budget = 6000;
};

// Parses the structured config text (JSON with sections system / protocol /
// policies / run). Throws ConfigError naming the offending field.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Hash of the physical parameters (system + protocol); used as provenance
// in every output file.
std::string config_hash(const SystemSpec& system, const ProtocolParams& params);

std::string stats_to_json(const simkit::SourcePairStats& stats,
                          const std::string& hash);

// Parses a counts file. Throws SchemaError naming the offending field.
// The embedded config hash is returned through `hash_out`.
simkit::SourcePairStats stats_from_json(const std::string& text,
                                        std::string& hash_out);

std::string report_to_json(const decoy::KeyRateReport& report,
                           const std::string& hash);

std::string observables_to_json(const ExpectedObservables& obs,
                                const std::string& hash);

// Write-then-rename so partial files are never left behind.
void atomic_write(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace mdiqkd::config
