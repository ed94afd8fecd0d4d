#include "sandbox3d/config.hpp"

#include "sandbox3d/errors.hpp"
#include "sandbox3d/image_io.hpp"

#include <cctype>
#include <charconv>
#include <functional>
#include <map>
#include <sstream>

namespace sandbox3d {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front())
        return s.substr(1, s.size() - 2);
    return s;
}

double to_double(const std::string& v) {
    double out = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw ConfigError("'" + v + "' is not a number");
    return out;
}

long to_long(const std::string& v) {
    long out = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw ConfigError("'" + v + "' is not an integer");
    return out;
}

bool to_bool(const std::string& v) {
    if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
    if (v == "false" || v == "no" || v == "off" || v == "0") return false;
    throw ConfigError("'" + v + "' is not a boolean");
}

PipelineMode to_mode(const std::string& v) {
    if (auto m = mode_from_string(v)) return *m;
    throw ConfigError("unknown mode '" + v + "'");
}

using Setter = std::function<void(PipelineConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"mode", [](auto& c, auto& v) { c.mode = to_mode(v); }},
        {"seed", [](auto& c, auto& v) { c.seed = static_cast<unsigned>(to_long(v)); }},
        {"prompt_dir", [](auto& c, auto& v) { c.prompt_dir = v; }},
        {"trajectory.count", [](auto& c, auto& v) { c.trajectory.count = static_cast<int>(to_long(v)); }},
        {"trajectory.length", [](auto& c, auto& v) { c.trajectory.length = static_cast<int>(to_long(v)); }},
        {"trajectory.step", [](auto& c, auto& v) { c.trajectory.step_m = to_double(v); }},
        {"trajectory.sweep", [](auto& c, auto& v) { c.trajectory.sweep_deg = to_double(v); }},
        {"elevation.n_pts", [](auto& c, auto& v) { c.elevation.n_pts = static_cast<int>(to_long(v)); }},
        {"elevation.erosion", [](auto& c, auto& v) { c.elevation.erosion_iterations = static_cast<int>(to_long(v)); }},
        {"consensus.delta", [](auto& c, auto& v) { c.consensus.delta = to_double(v); }},
        {"consensus.n_agree", [](auto& c, auto& v) { c.consensus.n_agree = static_cast<int>(to_long(v)); }},
        {"cluster.eps", [](auto& c, auto& v) { c.cluster.eps = to_double(v); }},
        {"cluster.min_pts", [](auto& c, auto& v) { c.cluster.min_pts = static_cast<int>(to_long(v)); }},
        {"cluster.min_cluster_size", [](auto& c, auto& v) { c.cluster.min_cluster_size = static_cast<int>(to_long(v)); }},
        {"cluster.min_extent", [](auto& c, auto& v) { c.cluster.min_extent = to_double(v); }},
        {"cluster.knn_k", [](auto& c, auto& v) { c.cluster.knn_k = static_cast<int>(to_long(v)); }},
        {"cluster.knn_std_ratio", [](auto& c, auto& v) { c.cluster.knn_std_ratio = to_double(v); }},
        {"cluster.gravity_aligned", [](auto& c, auto& v) { c.cluster.gravity_aligned = to_bool(v); }},
        {"render.width", [](auto& c, auto& v) { c.style.width = static_cast<int>(to_long(v)); }},
        {"render.height", [](auto& c, auto& v) { c.style.height = static_cast<int>(to_long(v)); }},
        {"render.line_width", [](auto& c, auto& v) { c.style.line_width = static_cast<int>(to_long(v)); }},
        {"render.grid", [](auto& c, auto& v) { c.style.draw_axes = to_bool(v); }},
        {"render.grid_spacing", [](auto& c, auto& v) { c.style.grid_spacing_m = to_double(v); }},
        {"render.stepback", [](auto& c, auto& v) { c.stepback_m = to_double(v); }},
        {"render.topdown_margin", [](auto& c, auto& v) { c.topdown_margin = to_double(v); }},
        {"render.pointcloud_stride", [](auto& c, auto& v) { c.pointcloud_stride = static_cast<int>(to_long(v)); }},
        {"vlm.provider",
         [](auto& c, auto& v) {
             if (v == "geometry") c.vlm = VlmKind::geometry;
             else if (v == "random") c.vlm = VlmKind::random;
             else if (v == "http") c.vlm = VlmKind::http;
             else throw ConfigError("unknown vlm provider '" + v + "'");
         }},
        {"vlm.base_url", [](auto& c, auto& v) { c.http.base_url = v; }},
        {"vlm.model", [](auto& c, auto& v) { c.http.model = v; }},
        {"vlm.timeout", [](auto& c, auto& v) { c.http.timeout_s = to_double(v); }},
        {"vlm.max_retries", [](auto& c, auto& v) { c.http.max_retries = static_cast<int>(to_long(v)); }},
        {"vlm.max_in_flight", [](auto& c, auto& v) { c.http.max_in_flight = static_cast<int>(to_long(v)); }},
        {"vlm.backoff", [](auto& c, auto& v) { c.http.backoff_base_s = to_double(v); }},
        {"vlm.temperature", [](auto& c, auto& v) { c.decode.temperature = to_double(v); }},
        {"vlm.max_tokens", [](auto& c, auto& v) { c.decode.max_tokens = static_cast<int>(to_long(v)); }},
        {"eval.parallel", [](auto& c, auto& v) { c.parallel = static_cast<int>(to_long(v)); }},
        {"eval.artifacts", [](auto& c, auto& v) { c.write_artifacts = to_bool(v); }},
        {"eval.frames", [](auto& c, auto& v) { c.write_frames = to_bool(v); }},
        {"eval.modes",
         [](auto& c, auto& v) {
             c.eval_modes.clear();
             std::stringstream ss(v);
             std::string item;
             while (std::getline(ss, item, ','))
                 if (auto t = trim(item); !t.empty()) c.eval_modes.push_back(to_mode(t));
         }},
    };
    return table;
}

}  // namespace

std::string_view to_string(VlmKind kind) {
    switch (kind) {
        case VlmKind::geometry: return "geometry";
        case VlmKind::random: return "random";
        case VlmKind::http: return "http";
    }
    return "geometry";
}

std::vector<PipelineMode> PipelineConfig::modes_to_evaluate() const {
    return eval_modes.empty() ? std::vector<PipelineMode>{mode} : eval_modes;
}

void PipelineConfig::validate() const {
    auto need = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError(what);
    };
    need(trajectory.count >= 1, "trajectory.count must be >= 1");
    need(trajectory.length >= 1, "trajectory.length must be >= 1");
    need(trajectory.step_m > 0, "trajectory.step must be > 0");
    need(trajectory.sweep_deg >= 0 && trajectory.sweep_deg <= 90, "trajectory.sweep must be in [0, 90]");
    need(elevation.n_pts >= 1, "elevation.n_pts must be >= 1");
    need(elevation.erosion_iterations >= 0, "elevation.erosion must be >= 0");
    need(consensus.delta > 0, "consensus.delta must be > 0");
    need(consensus.n_agree >= 0, "consensus.n_agree must be >= 0");
    need(cluster.eps > 0, "cluster.eps must be > 0");
    need(cluster.min_pts >= 1, "cluster.min_pts must be >= 1");
    need(cluster.min_cluster_size >= 1, "cluster.min_cluster_size must be >= 1");
    need(cluster.min_extent > 0, "cluster.min_extent must be > 0");
    need(cluster.knn_k >= 0, "cluster.knn_k must be >= 0");
    need(style.width >= 16 && style.height >= 16, "render size must be at least 16x16");
    need(style.line_width >= 1, "render.line_width must be >= 1");
    need(style.grid_spacing_m > 0, "render.grid_spacing must be > 0");
    need(stepback_m >= 0, "render.stepback must be >= 0");
    need(topdown_margin >= 0, "render.topdown_margin must be >= 0");
    need(pointcloud_stride >= 1, "render.pointcloud_stride must be >= 1");
    need(decode.max_tokens >= 1, "vlm.max_tokens must be >= 1");
    need(http.timeout_s > 0, "vlm.timeout must be > 0");
    need(http.max_retries >= 0, "vlm.max_retries must be >= 0");
    need(http.max_in_flight >= 1 && http.max_in_flight <= 64, "vlm.max_in_flight must be in [1, 64]");
    need(parallel >= 0, "eval.parallel must be >= 0");
}

PipelineConfig parse_config(std::string_view text) {
    PipelineConfig c;
    std::string section;
    std::istringstream in{std::string(text)};
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (!quoted && (line[i] == '#' || line[i] == ';')) {
                line.resize(i);
                break;
            }
        }
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = "line " + std::to_string(lineno) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
        const std::string key = (section.empty() ? "" : section + ".") + trim(line.substr(0, eq));
        const std::string value = unquote(trim(line.substr(eq + 1)));
        const auto it = setters().find(key);
        if (it == setters().end()) throw ConfigError(where + "unknown key '" + key + "'");
        try {
            it->second(c, value);
        } catch (const ConfigError& e) {
            throw ConfigError(where + key + ": " + e.what());
        }
    }
    c.validate();
    return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    auto c = parse_config(text);
    if (c.prompt_dir && c.prompt_dir->is_relative()) c.prompt_dir = path.parent_path() / *c.prompt_dir;
    return c;
}

}  // namespace sandbox3d
