#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "mdiqkd/config.hpp"
#include "mdiqkd/simkit.hpp"

using namespace mdiqkd;
using config::ConfigError;
using config::SchemaError;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("mdiqkd_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const {
        return (path / name).string();
    }
};

const char* kFullConfig = R"({
  "system": {
    "channel": {
      "total_length_km": 102.0,
      "attenuation_db_per_km": 0.19,
      "arm_split_fraction": 0.5,
      "extra_loss_alice_db": 0.0,
      "extra_loss_bob_db": 0.0
    },
    "detectors": {
      "efficiency_d1": 0.66,
      "efficiency_d2": 0.66,
      "dark_prob": 7.2e-08,
      "window_efficiency": 0.85
    },
    "misalignment_x": 0.015,
    "misalignment_z": 0.005,
    "clock_rate_hz": 7.5e7
  },
  "protocol": {
    "mu_x": 0.049, "mu_y": 0.189, "mu_z": 0.891,
    "p_x": 0.128, "p_y": 0.025, "p_z": 0.827
  },
  "policies": {
    "epsilon": 1e-10,
    "method": "chernoff",
    "ec_efficiency": 1.16,
    "n_cut": 7,
    "lp_tolerance": 1e-12
  },
  "run": {
    "n_pairs": 1000000,
    "seed": 7,
    "expected_mode": false
  }
})";

}  // namespace

TEST_CASE("full config parses with every field honored") {
    const auto cfg = config::parse_config(kFullConfig);
    CHECK(cfg.system.channel.total_length_km == 102.0);
    CHECK(cfg.system.detectors.efficiency_d1 == 0.66);
    CHECK(cfg.system.misalignment_z == 0.005);
    CHECK(cfg.protocol.mu_z == 0.891);
    CHECK(cfg.protocol.p_x == 0.128);
    CHECK(cfg.fluctuation.epsilon == 1e-10);
    CHECK(cfg.fluctuation.method ==
          decoy::FluctuationPolicy::Method::Chernoff);
    CHECK(cfg.analysis.ec_efficiency == 1.16);
    CHECK(cfg.analysis.n_cut == 7);
    CHECK(cfg.n_pairs == 1'000'000);
    CHECK(cfg.seed == 7);
    CHECK_FALSE(cfg.expected_mode);
    CHECK_FALSE(cfg.optimize_params);
}

TEST_CASE("missing sections fall back to documented defaults") {
    const auto cfg = config::parse_config("{}");
    CHECK(cfg.system.channel.total_length_km == 102.0);
    CHECK(cfg.protocol.mu_z == 0.891);
    CHECK(cfg.fluctuation.epsilon == 1e-10);
}

TEST_CASE("config errors name the offending field") {
    CHECK_THROWS_AS(config::parse_config("not json"), ConfigError);
    CHECK_THROWS_AS(config::parse_config("[1,2]"), ConfigError);

    try {
        config::parse_config(
            R"({"system": {"channel": {"total_length_km": "far"}}})");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("total_length_km") !=
              std::string::npos);
    }

    try {
        config::parse_config(R"({"policies": {"epsilon": 2.0}})");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("epsilon") != std::string::npos);
    }

    // Physically invalid values are rejected at parse time.
    CHECK_THROWS_AS(
        config::parse_config(R"({"protocol": {"mu_x": 0.5, "mu_y": 0.2}})"),
        ConfigError);
    CHECK_THROWS_AS(
        config::parse_config(R"({"policies": {"method": "exact"}})"),
        ConfigError);
    CHECK_THROWS_AS(config::parse_config(R"({"policies": {"n_cut": 1}})"),
                    ConfigError);
}

TEST_CASE("protocol section accepts the optimize marker") {
    const auto cfg =
        config::parse_config(R"({"protocol": "optimize"})");
    CHECK(cfg.optimize_params);
    CHECK_THROWS_AS(config::parse_config(R"({"protocol": "tune"})"),
                    ConfigError);
}

TEST_CASE("load_config surfaces missing files as config errors") {
    CHECK_THROWS_AS(config::load_config("/nonexistent/path.json"),
                    ConfigError);
}

TEST_CASE("counts files round-trip losslessly") {
    const auto cfg = config::parse_config(kFullConfig);
    const auto stats =
        simkit::simulate(cfg.system, cfg.protocol, 500'000, cfg.seed);
    const std::string hash = config::config_hash(cfg.system, cfg.protocol);
    const std::string text = config::stats_to_json(stats, hash);

    std::string hash_back;
    const auto parsed = config::stats_from_json(text, hash_back);
    CHECK(hash_back == hash);
    CHECK(parsed.total_pairs == stats.total_pairs);
    CHECK(parsed.seed == stats.seed);
    CHECK(parsed.discarded_sent == stats.discarded_sent);
    for (PairLabel label : kAllLabels) {
        CHECK(parsed.at(label).sent == stats.at(label).sent);
        CHECK(parsed.at(label).coincidences == stats.at(label).coincidences);
        CHECK(parsed.at(label).errors == stats.at(label).errors);
    }
}

TEST_CASE("counts schema violations raise SchemaError naming the field") {
    std::string hash;
    CHECK_THROWS_AS(config::stats_from_json("{", hash), SchemaError);
    CHECK_THROWS_AS(config::stats_from_json("{}", hash), SchemaError);

    const auto cfg = config::parse_config(kFullConfig);
    const auto stats =
        simkit::simulate(cfg.system, cfg.protocol, 100'000, cfg.seed);
    std::string text = config::stats_to_json(stats, "abc");

    // Drop one label section.
    auto broken = text;
    const auto pos = broken.find("\"zz\"");
    REQUIRE(pos != std::string::npos);
    broken.replace(pos, 4, "\"qq\"");
    try {
        config::stats_from_json(broken, hash);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("zz") != std::string::npos);
    }

    // Internally inconsistent counts are rejected even when well-formed.
    auto inconsistent = stats;
    inconsistent.at(PairLabel::zz).errors =
        inconsistent.at(PairLabel::zz).coincidences + 1;
    const std::string bad_text = config::stats_to_json(inconsistent, "abc");
    std::string hash2;
    CHECK_THROWS_AS(config::stats_from_json(bad_text, hash2), SchemaError);
}

TEST_CASE("config hash tracks physical parameters only") {
    const auto cfg = config::parse_config(kFullConfig);
    const std::string base = config::config_hash(cfg.system, cfg.protocol);

    auto sys2 = cfg.system;
    sys2.channel.total_length_km = 103.0;
    CHECK(config::config_hash(sys2, cfg.protocol) != base);

    auto proto2 = cfg.protocol;
    proto2.mu_z = 0.892;
    CHECK(config::config_hash(cfg.system, proto2) != base);

    // Stable across calls.
    CHECK(config::config_hash(cfg.system, cfg.protocol) == base);
}

TEST_CASE("atomic_write leaves no partial files and read_file round-trips") {
    TempDir tmp;
    const std::string path = tmp.file("out.json");
    config::atomic_write(path, "hello\n");
    CHECK(config::read_file(path) == "hello\n");
    CHECK_FALSE(fs::exists(path + ".tmp"));
    // Overwrite in place.
    config::atomic_write(path, "world\n");
    CHECK(config::read_file(path) == "world\n");

    CHECK_THROWS_AS(config::read_file(tmp.file("missing.json")),
                    std::runtime_error);
}

TEST_CASE("report and observables serialize with provenance") {
    decoy::KeyRateReport report;
    report.key_length = 42;
    report.rate_per_pulse = 1e-9;
    report.rate_bps = 0.075;
    const std::string text = config::report_to_json(report, "deadbeef");
    CHECK(text.find("deadbeef") != std::string::npos);
    CHECK(text.find("key_length") != std::string::npos);
    CHECK(text.find("42") != std::string::npos);

    ExpectedObservables obs;
    obs.at(PairLabel::zz) = {6.4e-4, 3.2e-6};
    const std::string obs_text = config::observables_to_json(obs, "deadbeef");
    CHECK(obs_text.find("\"zz\"") != std::string::npos);
    CHECK(obs_text.find("0.00064") != std::string::npos);
}

TEST_CASE("pair label names round-trip") {
    for (PairLabel label : kAllLabels) {
        PairLabel back;
        REQUIRE(pair_label_from_string(to_string(label), back));
        CHECK(back == label);
    }
    PairLabel out;
    CHECK_FALSE(pair_label_from_string("zq", out));
}

#ifdef MDIQKD_BIN
TEST_CASE("command-line pipeline honors the documented exit codes") {
    TempDir tmp;
    const std::string bin = MDIQKD_BIN;
    const std::string cfg_path = tmp.file("config.json");
    config::atomic_write(cfg_path, kFullConfig);

    const auto run = [&](const std::string& args) {
        const std::string cmd =
            bin + " " + args + " >" + tmp.file("stdout") + " 2>" +
            tmp.file("stderr");
        const int status = std::system(cmd.c_str());
        return WEXITSTATUS(status);
    };

    // No config anywhere: config error (2).
    ::unsetenv(config::kConfigEnvVar);
    CHECK(run("model") == 2);
    // Missing config file: config error (2).
    CHECK(run("model --config " + tmp.file("nope.json")) == 2);

    // Simulate then analyze: success end to end.
    const std::string counts = tmp.file("counts.json");
    CHECK(run("simulate --config " + cfg_path + " --pairs 200000 --out " +
              counts) == 0);
    CHECK(fs::exists(counts));
    CHECK(run("analyze --config " + cfg_path + " --counts " + counts +
              " --out " + tmp.file("report.json")) == 0);

    // Same seed reproduces the counts file byte for byte.
    const std::string counts2 = tmp.file("counts2.json");
    CHECK(run("simulate --config " + cfg_path + " --pairs 200000 --out " +
              counts2) == 0);
    CHECK(config::read_file(counts) == config::read_file(counts2));

    // Analyzing under different physical parameters refuses with a data
    // error (3) unless the override flag is given.
    CHECK(run("analyze --config " + cfg_path + " --distance 150 --counts " +
              counts) == 3);
    CHECK(run("analyze --config " + cfg_path + " --distance 150 --counts " +
              counts + " --override-provenance") == 0);

    // Malformed counts file: data error (3).
    const std::string junk = tmp.file("junk.json");
    config::atomic_write(junk, "{\"meta\": {}}");
    CHECK(run("analyze --config " + cfg_path + " --counts " + junk) == 3);

    // Sweep produces one CSV row per distance plus a header.
    const std::string csv = tmp.file("sweep.csv");
    CHECK(run("sweep --config " + cfg_path +
              " --distances 50,102 --pairs 1000000000 --out " + csv) == 0);
    const std::string content = config::read_file(csv);
    CHECK(content.find("distance_km") != std::string::npos);
    int lines = 0;
    for (char c : content) lines += c == '\n';
    CHECK(lines == 3);
}
#endif
