#include "mdiqkd/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mdiqkd::config {

namespace {

using nlohmann::json;

double get_number(const json& j, const char* section, const char* field,
                  double fallback) {
    if (!j.contains(field)) return fallback;
    const json& v = j.at(field);
    if (!v.is_number())
        throw ConfigError(std::string(section) + "." + field +
                          ": expected a number");
    return v.get<double>();
}

std::uint64_t get_count(const json& j, const char* section, const char* field,
                        std::uint64_t fallback) {
    if (!j.contains(field)) return fallback;
    const json& v = j.at(field);
    if (!v.is_number_unsigned() && !v.is_number_integer())
        throw ConfigError(std::string(section) + "." + field +
                          ": expected a non-negative integer");
    const auto value = v.get<std::int64_t>();
    if (value < 0)
        throw ConfigError(std::string(section) + "." + field +
                          ": expected a non-negative integer");
    return static_cast<std::uint64_t>(value);
}

json require_object(const json& j, const char* name) {
    if (!j.contains(name)) return json::object();
    if (!j.at(name).is_object())
        throw ConfigError(std::string(name) + ": expected an object");
    return j.at(name);
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be an object");

    RunConfig cfg;

    const json sys = require_object(j, "system");
    const json channel = require_object(sys, "channel");
    cfg.system.channel.total_length_km =
        get_number(channel, "system.channel", "total_length_km",
                   cfg.system.channel.total_length_km);
    cfg.system.channel.attenuation_db_per_km =
        get_number(channel, "system.channel", "attenuation_db_per_km",
                   cfg.system.channel.attenuation_db_per_km);
    cfg.system.channel.arm_split_fraction =
        get_number(channel, "system.channel", "arm_split_fraction",
                   cfg.system.channel.arm_split_fraction);
    cfg.system.channel.extra_loss_alice_db =
        get_number(channel, "system.channel", "extra_loss_alice_db",
                   cfg.system.channel.extra_loss_alice_db);
    cfg.system.channel.extra_loss_bob_db =
        get_number(channel, "system.channel", "extra_loss_bob_db",
                   cfg.system.channel.extra_loss_bob_db);

    const json det = require_object(sys, "detectors");
    cfg.system.detectors.efficiency_d1 =
        get_number(det, "system.detectors", "efficiency_d1",
                   cfg.system.detectors.efficiency_d1);
    cfg.system.detectors.efficiency_d2 =
        get_number(det, "system.detectors", "efficiency_d2",
                   cfg.system.detectors.efficiency_d2);
    cfg.system.detectors.dark_prob = get_number(
        det, "system.detectors", "dark_prob", cfg.system.detectors.dark_prob);
    cfg.system.detectors.window_efficiency =
        get_number(det, "system.detectors", "window_efficiency",
                   cfg.system.detectors.window_efficiency);

    cfg.system.misalignment_x =
        get_number(sys, "system", "misalignment_x", cfg.system.misalignment_x);
    cfg.system.misalignment_z =
        get_number(sys, "system", "misalignment_z", cfg.system.misalignment_z);
    cfg.system.clock_rate_hz =
        get_number(sys, "system", "clock_rate_hz", cfg.system.clock_rate_hz);

    if (j.contains("protocol") && j.at("protocol").is_string()) {
        if (j.at("protocol").get<std::string>() != "optimize")
            throw ConfigError("protocol: expected an object or \"optimize\"");
        cfg.optimize_params = true;
    } else {
        const json proto = require_object(j, "protocol");
        cfg.protocol.mu_x =
            get_number(proto, "protocol", "mu_x", cfg.protocol.mu_x);
        cfg.protocol.mu_y =
            get_number(proto, "protocol", "mu_y", cfg.protocol.mu_y);
        cfg.protocol.mu_z =
            get_number(proto, "protocol", "mu_z", cfg.protocol.mu_z);
        cfg.protocol.p_x =
            get_number(proto, "protocol", "p_x", cfg.protocol.p_x);
        cfg.protocol.p_y =
            get_number(proto, "protocol", "p_y", cfg.protocol.p_y);
        cfg.protocol.p_z =
            get_number(proto, "protocol", "p_z", cfg.protocol.p_z);
    }

    const json policies = require_object(j, "policies");
    cfg.fluctuation.epsilon = get_number(policies, "policies", "epsilon",
                                         cfg.fluctuation.epsilon);
    if (policies.contains("method")) {
        const std::string method = policies.at("method").get<std::string>();
        if (method == "chernoff") {
            cfg.fluctuation.method = decoy::FluctuationPolicy::Method::Chernoff;
        } else if (method == "gaussian") {
            cfg.fluctuation.method = decoy::FluctuationPolicy::Method::Gaussian;
        } else {
            throw ConfigError("policies.method: expected chernoff or gaussian");
        }
    }
    cfg.analysis.ec_efficiency = get_number(policies, "policies",
                                            "ec_efficiency",
                                            cfg.analysis.ec_efficiency);
    cfg.analysis.n_cut = static_cast<int>(
        get_count(policies, "policies", "n_cut", cfg.analysis.n_cut));
    cfg.analysis.lp_tolerance = get_number(policies, "policies", "lp_tolerance",
                                           cfg.analysis.lp_tolerance);

    const json run = require_object(j, "run");
    cfg.n_pairs = get_count(run, "run", "n_pairs", cfg.n_pairs);
    cfg.seed = get_count(run, "run", "seed", cfg.seed);
    cfg.starts = static_cast<int>(get_count(run, "run", "starts", cfg.starts));
    cfg.budget = get_count(run, "run", "budget", cfg.budget);
    if (run.contains("expected_mode"))
        cfg.expected_mode = run.at("expected_mode").get<bool>();

    try {
        cfg.system.validate();
        if (!cfg.optimize_params) cfg.protocol.validate();
        if (cfg.fluctuation.epsilon <= 0.0 || cfg.fluctuation.epsilon >= 1.0)
            throw std::invalid_argument("policies.epsilon must be in (0,1)");
        if (cfg.analysis.ec_efficiency < 1.0)
            throw std::invalid_argument("policies.ec_efficiency must be >= 1");
        if (cfg.analysis.n_cut < 2)
            throw std::invalid_argument("policies.n_cut must be >= 2");
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const std::runtime_error& e) {
        throw ConfigError(e.what());
    }
    return parse_config(text);
}

std::string config_hash(const SystemSpec& system,
                        const ProtocolParams& params) {
    json j;
    j["channel"] = {system.channel.total_length_km,
                    system.channel.attenuation_db_per_km,
                    system.channel.arm_split_fraction,
                    system.channel.extra_loss_alice_db,
                    system.channel.extra_loss_bob_db};
    j["detectors"] = {system.detectors.efficiency_d1,
                      system.detectors.efficiency_d2,
                      system.detectors.dark_prob,
                      system.detectors.window_efficiency};
    j["misalignment"] = {system.misalignment_x, system.misalignment_z};
    j["clock_rate_hz"] = system.clock_rate_hz;
    j["protocol"] = {params.mu_x, params.mu_y, params.mu_z,
                     params.p_x, params.p_y, params.p_z};
    const std::string canonical = j.dump();

    std::uint64_t hash = 0xCBF29CE484222325ULL;  // FNV-1a
    for (unsigned char c : canonical) {
        hash ^= c;
        hash *= 0x100000001B3ULL;
    }
    std::ostringstream out;
    out << std::hex << hash;
    return out.str();
}

std::string stats_to_json(const simkit::SourcePairStats& stats,
                          const std::string& hash) {
    json j;
    j["meta"] = {{"config_hash", hash},
                 {"seed", stats.seed},
                 {"n_pairs", stats.total_pairs},
                 {"expected_mode", stats.expected_mode},
                 {"tool_version", kToolVersion}};
    json s = json::object();
    for (PairLabel label : kAllLabels) {
        const simkit::LabelCounts& c = stats.at(label);
        s[to_string(label)] = {{"sent", c.sent},
                               {"coincidences", c.coincidences},
                               {"errors", c.errors}};
    }
    s["discarded_sent"] = stats.discarded_sent;
    j["stats"] = s;
    return j.dump(2) + "\n";
}

simkit::SourcePairStats stats_from_json(const std::string& text,
                                        std::string& hash_out) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("counts file is not valid JSON: ") +
                          e.what());
    }
    const auto require = [](const json& node, const char* field,
                            const char* context) -> const json& {
        if (!node.contains(field))
            throw SchemaError(std::string("counts file: missing field ") +
                              context + "." + field);
        return node.at(field);
    };

    const json& meta = require(j, "meta", "");
    const json& s = require(j, "stats", "");

    simkit::SourcePairStats stats;
    hash_out = require(meta, "config_hash", "meta").get<std::string>();
    stats.seed = require(meta, "seed", "meta").get<std::uint64_t>();
    stats.total_pairs = require(meta, "n_pairs", "meta").get<std::uint64_t>();
    if (meta.contains("expected_mode"))
        stats.expected_mode = meta.at("expected_mode").get<bool>();

    for (PairLabel label : kAllLabels) {
        const char* name = to_string(label);
        if (!s.contains(name))
            throw SchemaError(std::string("counts file: missing field stats.") +
                              name);
        const json& entry = s.at(name);
        simkit::LabelCounts& c = stats.at(label);
        c.sent = require(entry, "sent", name).get<std::uint64_t>();
        c.coincidences =
            require(entry, "coincidences", name).get<std::uint64_t>();
        c.errors = require(entry, "errors", name).get<std::uint64_t>();
    }
    stats.discarded_sent =
        require(s, "discarded_sent", "stats").get<std::uint64_t>();
    try {
        stats.validate();
    } catch (const std::invalid_argument& e) {
        throw SchemaError(std::string("counts file: ") + e.what());
    }
    return stats;
}

std::string report_to_json(const decoy::KeyRateReport& report,
                           const std::string& hash) {
    json j;
    j["meta"] = {{"config_hash", hash}, {"tool_version", kToolVersion}};
    j["report"] = {
        {"mode", report.mode == decoy::KeyRateReport::Mode::Finite
                     ? "finite"
                     : "asymptotic"},
        {"s11_lower", report.s11_lower},
        {"e11_upper", report.e11_upper},
        {"n11_lower", report.n11_lower},
        {"key_length", report.key_length},
        {"rate_per_pulse", report.rate_per_pulse},
        {"rate_bps", report.rate_bps},
        {"epsilon_used", report.epsilon_used},
        {"secure", report.secure}};
    return j.dump(2) + "\n";
}

std::string observables_to_json(const ExpectedObservables& obs,
                                const std::string& hash) {
    json j;
    j["meta"] = {{"config_hash", hash}, {"tool_version", kToolVersion}};
    json table = json::object();
    for (PairLabel label : kAllLabels) {
        const GainErrorPair& ge = obs.at(label);
        table[to_string(label)] = {{"gain", ge.gain},
                                   {"error_gain", ge.error_gain}};
    }
    j["observables"] = table;
    return j.dump(2) + "\n";
}

void atomic_write(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot open for writing: " + tmp.string());
        out << content;
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw std::runtime_error("write failed: " + tmp.string());
        }
    }
    fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace mdiqkd::config
