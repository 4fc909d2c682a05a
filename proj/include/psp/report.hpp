#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "psp/io.hpp"
#include "psp/simkit.hpp"

namespace psp::report {

using nlohmann::json;

json to_json(const sim::SceneSpec& spec);
sim::SceneSpec scene_spec_from_json(const json& j);

json to_json(const sim::ExperimentSpec& spec);
sim::ExperimentSpec experiment_spec_from_json(const json& j);

// Experiment config file: an ExperimentSpec object plus an optional "sweep"
// array of sampling periods.
struct ExperimentConfig {
    sim::ExperimentSpec spec;
    std::vector<std::size_t> sweep;
};

ExperimentConfig experiment_config_from_json(const json& j);
json to_json(const ExperimentConfig& cfg);

// Built-in configuration used when `report` runs without --config.
ExperimentConfig default_experiment_config();

json to_json(const RecoveryReport& r, std::size_t sampling_period);
json to_json(const sim::ExperimentReport& r);

// Deterministic report body for a sweep (no timestamps).
json sweep_body(const sim::SweepTable& table, const ExperimentConfig& cfg);

std::string summary_csv(const sim::SweepTable& table);

struct Series {
    std::string name;
    std::string color;
    std::vector<double> x;
    std::vector<double> y;
};

std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::vector<Series>& series);

// Writes report.json, summary.csv and per-T_s spectrum/signal SVGs into dir.
// Returns the written paths.
std::vector<std::filesystem::path> write_report(const std::filesystem::path& dir,
                                                const sim::SweepTable& table,
                                                const ExperimentConfig& cfg);

std::string hex_hash(std::uint64_t h);
std::uint64_t fnv1a(std::string_view bytes);

}  // namespace psp::report
