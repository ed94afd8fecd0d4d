#include "sandbox3d/eval.hpp"

#include "sandbox3d/errors.hpp"
#include "sandbox3d/geometry_vlm.hpp"
#include "sandbox3d/http_vlm.hpp"
#include "sandbox3d/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <atomic>
#include <cstdio>
#include <set>
#include <thread>

namespace sandbox3d {

namespace fs = std::filesystem;

int RunReport::failed_records() const {
    int n = 0;
    for (const auto& m : modes)
        for (const auto& r : m.records)
            if (r.failed_stage) ++n;
    return n;
}

std::vector<std::string> RunReport::categories() const {
    std::set<std::string> seen;
    for (const auto& m : modes)
        for (const auto& [c, _] : m.per_category) seen.insert(c);
    std::vector<std::string> out;
    for (auto t : kAllTemplates)
        if (seen.erase(std::string(to_string(t)))) out.emplace_back(to_string(t));
    out.insert(out.end(), seen.begin(), seen.end());
    return out;
}

VlmFactory make_vlm_factory(const PipelineConfig& config) {
    switch (config.vlm) {
        case VlmKind::geometry:
            return [](const QARecord&, const SceneSource& s) -> std::shared_ptr<ChatVlm> {
                return std::make_shared<GeometryReadingVlm>(reference_hints(s));
            };
        case VlmKind::random: {
            auto shared = std::make_shared<RandomChoiceVlm>(config.seed);
            return [shared](const QARecord&, const SceneSource&) -> std::shared_ptr<ChatVlm> { return shared; };
        }
        case VlmKind::http: {
            auto shared = std::make_shared<HttpVlm>(HttpVlmConfig::from_env(config.http));
            return [shared](const QARecord&, const SceneSource&) -> std::shared_ptr<ChatVlm> { return shared; };
        }
    }
    throw ConfigError("unknown VLM provider");
}

namespace {

std::string safe_name(const std::string& id) {
    std::string out;
    for (char c : id) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
    return out.empty() ? "record" : out;
}

RecordResult run_record(const PipelineConfig& base, PipelineMode mode, const QARecord& rec, const VlmFactory& factory,
                        const fs::path& base_dir, const fs::path& out_dir) {
    RecordResult r;
    r.id = rec.id;
    r.category = rec.category;
    r.scene_ref = rec.scene_ref;
    r.mode = r.used_mode = mode;
    r.gold = rec.gold;
    try {
        const auto scene = open_scene(rec.scene_ref, base_dir);
        auto vlm = factory(rec, scene);
        PipelineConfig cfg = base;
        cfg.mode = mode;
        fs::path dir;
        if (!out_dir.empty() && cfg.write_artifacts) {
            r.artifact_dir = std::string(to_string(mode)) + "/" + safe_name(rec.id);
            dir = out_dir / r.artifact_dir;
        }
        const auto res = run_pipeline(cfg, scene, {rec.id, rec.question, rec.choices}, *vlm, dir);
        r.used_mode = res.used_mode;
        r.predicted = res.predicted;
        r.flags = res.flags;
        r.failed_stage = res.failed_stage;
        r.error = res.error;
        r.vlm_calls = res.vlm_calls;
        r.wall_time_s = res.wall_time_s;
    } catch (const std::exception& e) {
        r.failed_stage = "scene";
        r.error = e.what();
    }
    r.correct = r.predicted && *r.predicted == r.gold;
    return r;
}

}  // namespace

RunReport run_eval(const PipelineConfig& config, const std::vector<QARecord>& records, const VlmFactory& vlm,
                   const fs::path& base_dir, const fs::path& out_dir) {
    config.validate();
    RunReport report;
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned workers = config.parallel > 0 ? static_cast<unsigned>(config.parallel) : hw;
    for (auto mode : config.modes_to_evaluate()) {
        ModeReport mr;
        mr.mode = mode;
        mr.records.resize(records.size());
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i = next++; i < records.size(); i = next++)
                mr.records[i] = run_record(config, mode, records[i], vlm, base_dir, out_dir);
        };
        std::vector<std::jthread> pool;
        for (unsigned w = 1; w < std::min<std::size_t>(workers, records.size()); ++w) pool.emplace_back(worker);
        worker();
        pool.clear();
        for (const auto& r : mr.records) {
            ++mr.overall.total;
            auto& c = mr.per_category[r.category];
            ++c.total;
            if (r.correct) {
                ++mr.overall.correct;
                ++c.correct;
            }
        }
        report.modes.push_back(std::move(mr));
    }
    return report;
}

nlohmann::json report_json(const RunReport& report) {
    nlohmann::json modes = nlohmann::json::array();
    for (const auto& m : report.modes) {
        nlohmann::json cats = nlohmann::json::object();
        for (const auto& [name, s] : m.per_category)
            cats[name] = {{"total", s.total}, {"correct", s.correct}, {"accuracy", s.accuracy()}};
        nlohmann::json recs = nlohmann::json::array();
        nlohmann::json failures = nlohmann::json::array();
        for (const auto& r : m.records) {
            nlohmann::json j = {{"id", r.id},
                                {"category", r.category},
                                {"scene", r.scene_ref},
                                {"mode", std::string(to_string(r.mode))},
                                {"used_mode", std::string(to_string(r.used_mode))},
                                {"gold", std::string(1, r.gold)},
                                {"predicted", r.predicted ? std::string(1, *r.predicted) : std::string()},
                                {"correct", r.correct},
                                {"flags", r.flags},
                                {"artifacts", r.artifact_dir},
                                {"vlm_calls", r.vlm_calls},
                                {"wall_time_s", r.wall_time_s}};
            if (r.failed_stage) {
                j["failed_stage"] = *r.failed_stage;
                j["error"] = r.error;
                failures.push_back({{"id", r.id}, {"stage", *r.failed_stage}, {"error", r.error}});
            }
            recs.push_back(std::move(j));
        }
        modes.push_back({{"mode", std::string(to_string(m.mode))},
                         {"overall", {{"total", m.overall.total}, {"correct", m.overall.correct},
                                      {"accuracy", m.overall.accuracy()}}},
                         {"categories", cats},
                         {"failures", failures},
                         {"records", recs}});
    }
    return {{"modes", modes}, {"failed_records", report.failed_records()}};
}

std::string report_csv(const RunReport& report) {
    const auto cats = report.categories();
    std::string out = "mode";
    for (const auto& c : cats) out += "," + c;
    out += ",overall,n,failed\n";
    char buf[32];
    for (const auto& m : report.modes) {
        out += std::string(to_string(m.mode));
        for (const auto& c : cats) {
            const auto it = m.per_category.find(c);
            std::snprintf(buf, sizeof(buf), ",%.4f", it == m.per_category.end() ? 0.0 : it->second.accuracy());
            out += buf;
        }
        std::snprintf(buf, sizeof(buf), ",%.4f", m.overall.accuracy());
        out += buf;
        int failed = 0;
        for (const auto& r : m.records) failed += r.failed_stage ? 1 : 0;
        out += "," + std::to_string(m.overall.total) + "," + std::to_string(failed) + "\n";
    }
    return out;
}

void write_report(const RunReport& report, const fs::path& out_dir) {
    write_text_file(out_dir / "report.json", report_json(report).dump(2) + "\n");
    write_text_file(out_dir / "report.csv", report_csv(report));
}

}  // namespace sandbox3d
