#pragma once

// Benchmark evaluation: run the pipeline per record and mode, score answer
// letters, aggregate per category.

#include "sandbox3d/pipeline.hpp"
#include "sandbox3d/qa.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace sandbox3d {

struct RecordResult {
    std::string id;
    std::string category;
    std::string scene_ref;
    PipelineMode mode = PipelineMode::full;
    PipelineMode used_mode = PipelineMode::full;
    char gold = 'A';
    std::optional<char> predicted;
    bool correct = false;
    std::vector<std::string> flags;
    std::optional<std::string> failed_stage;
    std::string error;
    std::string artifact_dir;  // relative to the report directory, empty if none
    int vlm_calls = 0;
    double wall_time_s = 0.0;
};

struct CategoryScore {
    int total = 0;
    int correct = 0;
    double accuracy() const { return total == 0 ? 0.0 : double(correct) / total; }
};

struct ModeReport {
    PipelineMode mode = PipelineMode::full;
    std::vector<RecordResult> records;  // benchmark order
    CategoryScore overall;
    std::map<std::string, CategoryScore> per_category;
};

struct RunReport {
    std::vector<ModeReport> modes;

    int failed_records() const;
    // Category names in template order, then any others alphabetically.
    std::vector<std::string> categories() const;
};

// Builds the VLM for one record. Implementations may return a shared instance.
using VlmFactory = std::function<std::shared_ptr<ChatVlm>(const QARecord&, const SceneSource&)>;

// geometry: one mock per record bound to the record's synthetic world;
// random: seeded by config.seed; http: one shared client from config and environment.
VlmFactory make_vlm_factory(const PipelineConfig& config);

// `base_dir` resolves relative bundle references. Artifacts of record r in
// mode m go to out_dir/m/r when out_dir is non-empty.
RunReport run_eval(const PipelineConfig& config, const std::vector<QARecord>& records, const VlmFactory& vlm,
                   const std::filesystem::path& base_dir, const std::filesystem::path& out_dir);

nlohmann::json report_json(const RunReport& report);
// One row per mode: mode, one accuracy column per category, overall, n, failed.
std::string report_csv(const RunReport& report);
// report.json and report.csv.
void write_report(const RunReport& report, const std::filesystem::path& out_dir);

}  // namespace sandbox3d
