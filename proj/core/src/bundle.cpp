#include "sandbox3d/bundle.hpp"

#include "sandbox3d/errors.hpp"
#include "sandbox3d/image_io.hpp"
#include "sandbox3d/synthetic_providers.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cmath>
#include <cstring>

namespace sandbox3d {

namespace fs = std::filesystem;

namespace {

std::uint32_t byteswap32(std::uint32_t v) {
    return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

std::optional<AbstractMotion> motion_from(const std::string& s) {
    for (auto m : {AbstractMotion::left, AbstractMotion::fwd_left, AbstractMotion::forward, AbstractMotion::fwd_right,
                   AbstractMotion::right})
        if (to_string(m) == s) return m;
    return std::nullopt;
}

template <class T>
T field(const nlohmann::json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw BundleFormatError(where + "." + key, "missing");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw BundleFormatError(where + "." + key, e.what());
    }
}

nlohmann::json pose_json(const CameraPose& p) {
    nlohmann::json a = nlohmann::json::array();
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) a.push_back(p.rotation(r, c));
        a.push_back(p.translation[r]);
    }
    for (double v : {0.0, 0.0, 0.0, 1.0}) a.push_back(v);
    return a;
}

CameraPose pose_from(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 16) throw BundleFormatError("pose", where + ": expected 16 numbers");
    double m[16];
    for (int i = 0; i < 16; ++i) {
        if (!j[static_cast<std::size_t>(i)].is_number()) throw BundleFormatError("pose", where + ": non-numeric entry");
        m[i] = j[static_cast<std::size_t>(i)].get<double>();
    }
    CameraPose p;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) p.rotation(r, c) = m[4 * r + c];
        p.translation[r] = m[4 * r + 3];
    }
    if (m[12] != 0.0 || m[13] != 0.0 || m[14] != 0.0 || m[15] != 1.0)
        throw BundleFormatError("pose", where + ": last row must be 0 0 0 1");
    if (!p.is_valid(1e-5)) throw BundleFormatError("pose", where + ": rotation is not orthonormal");
    return p;
}

}  // namespace

const BundleView& Bundle::input() const {
    for (const auto& v : views)
        if (v.frame.view_id.is_input()) return v;
    throw BundleFormatError("views", "no input view (trajectory -1)");
}

std::optional<std::size_t> Bundle::find_view(const ViewFrame& frame) const {
    for (std::size_t i = 0; i < views.size(); ++i)
        if (views[i].frame.view_id == frame.view_id && views[i].frame.pose == frame.pose) return i;
    return std::nullopt;
}

std::vector<float> read_depth_file(const fs::path& path, int width, int height) {
    std::vector<std::uint8_t> bytes;
    try {
        bytes = read_file_bytes(path);
    } catch (const std::exception& e) {
        throw BundleFormatError("depth", e.what());
    }
    const std::size_t n = static_cast<std::size_t>(width) * height;
    if (bytes.size() != n * 4)
        throw BundleFormatError("depth length", path.string() + ": " + std::to_string(bytes.size()) + " bytes, expected " +
                                                    std::to_string(n * 4));
    std::vector<float> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t u;
        std::memcpy(&u, bytes.data() + 4 * i, 4);
        if constexpr (std::endian::native == std::endian::big) u = byteswap32(u);
        std::memcpy(&out[i], &u, 4);
    }
    return out;
}

void write_depth_file(const fs::path& path, const DepthGrid& depth) {
    std::vector<std::uint8_t> bytes(depth.values.size() * 4);
    for (std::size_t i = 0; i < depth.values.size(); ++i) {
        std::uint32_t u;
        std::memcpy(&u, &depth.values[i], 4);
        if constexpr (std::endian::native == std::endian::big) u = byteswap32(u);
        std::memcpy(bytes.data() + 4 * i, &u, 4);
    }
    write_file_bytes(path, bytes);
}

Bundle load_bundle(const fs::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    if (!fs::exists(manifest_path)) throw BundleFormatError("manifest.json", "not found in " + dir.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(manifest_path));
    } catch (const nlohmann::json::exception& e) {
        throw BundleFormatError("manifest.json", e.what());
    }
    Bundle b;
    b.root = dir;
    b.scene_id = j.value("scene_id", dir.filename().string());
    if (j.contains("up")) {
        const auto& u = j["up"];
        if (!u.is_array() || u.size() != 3) throw BundleFormatError("up", "expected 3 numbers");
        b.up_axis = Vec3(u[0].get<double>(), u[1].get<double>(), u[2].get<double>());
        if (!(b.up_axis.norm() > 0)) throw BundleFormatError("up", "zero vector");
        b.up_axis.normalize();
    }
    if (!j.contains("views") || !j["views"].is_array() || j["views"].empty())
        throw BundleFormatError("views", "missing or empty");
    for (std::size_t i = 0; i < j["views"].size(); ++i) {
        const auto& v = j["views"][i];
        const std::string where = "views[" + std::to_string(i) + "]";
        BundleView bv;
        bv.image_path = field<std::string>(v, "image", where);
        bv.depth_path = field<std::string>(v, "depth", where);
        const int w = field<int>(v, "width", where), h = field<int>(v, "height", where);
        if (w <= 0 || h <= 0) throw BundleFormatError(where + ".width", "non-positive size");
        if (!v.contains("intrinsics")) throw BundleFormatError("intrinsics", where + ": missing");
        const auto& k = v["intrinsics"];
        auto& f = bv.frame;
        f.intrinsics = {field<double>(k, "fx", where + ".intrinsics"), field<double>(k, "fy", where + ".intrinsics"),
                        field<double>(k, "cx", where + ".intrinsics"), field<double>(k, "cy", where + ".intrinsics"), w,
                        h};
        if (!f.intrinsics.is_valid()) throw BundleFormatError("intrinsics", where + ": invalid");
        if (!v.contains("pose")) throw BundleFormatError("pose", where + ": missing");
        f.pose = pose_from(v["pose"], where);
        f.view_id = {v.value("trajectory", ViewId::kInputTrajectory), v.value("timestep", 0)};
        if (v.contains("motion")) {
            bv.motion = motion_from(field<std::string>(v, "motion", where));
            if (!bv.motion) throw BundleFormatError(where + ".motion", "unknown motion");
        }
        try {
            f.image = read_image(dir / bv.image_path);
        } catch (const std::exception& e) {
            throw BundleFormatError(where + ".image", e.what());
        }
        if (f.image.width != w || f.image.height != h)
            throw BundleFormatError(where + ".image", "image size differs from width/height");
        f.depth = DepthGrid(w, h);
        f.depth.values = read_depth_file(dir / bv.depth_path, w, h);
        b.views.push_back(std::move(bv));
    }
    if (j.contains("masks")) {
        for (std::size_t i = 0; i < j["masks"].size(); ++i) {
            const auto& m = j["masks"][i];
            const std::string where = "masks[" + std::to_string(i) + "]";
            BundleMask bm;
            bm.view = field<std::size_t>(m, "view", where);
            if (bm.view >= b.views.size()) throw BundleFormatError(where + ".view", "index out of range");
            bm.object_id = field<int>(m, "object_id", where);
            bm.label = field<std::string>(m, "label", where);
            bm.path = field<std::string>(m, "path", where);
            if (!fs::exists(dir / bm.path)) throw BundleFormatError(where + ".path", "file not found");
            b.masks.push_back(std::move(bm));
        }
    }
    b.input();
    return b;
}

InstanceMask load_mask(const Bundle& bundle, const BundleMask& mask) {
    const auto& frame = bundle.views.at(mask.view).frame;
    RgbImage img;
    try {
        img = read_image(bundle.root / mask.path);
    } catch (const std::exception& e) {
        throw BundleFormatError("mask", e.what());
    }
    if (img.width != frame.image.width || img.height != frame.image.height)
        throw BundleFormatError("mask", mask.path + ": size differs from its view");
    InstanceMask m(img.width, img.height, mask.object_id, mask.label);
    for (std::size_t i = 0; i < m.bits.size(); ++i)
        m.bits[i] = (img.data[3 * i] | img.data[3 * i + 1] | img.data[3 * i + 2]) != 0 ? 1 : 0;
    return m;
}

void write_bundle(const fs::path& dir, const std::string& scene_id, const Vec3& up_axis, std::vector<BundleView> views,
                  const std::vector<MaskToWrite>& masks) {
    const auto ext = default_image_extension();
    nlohmann::json j;
    j["scene_id"] = scene_id;
    j["up"] = {up_axis.x(), up_axis.y(), up_axis.z()};
    j["views"] = nlohmann::json::array();
    for (auto& v : views) {
        const auto& f = v.frame;
        std::string stem = f.view_id.is_input() ? "input" : f.view_id.to_string();
        if (v.motion) stem = std::string(to_string(*v.motion)) + "_" + stem;
        if (v.image_path.empty()) v.image_path = "images/" + stem + ext;
        if (v.depth_path.empty()) v.depth_path = "depth/" + stem + ".f32";
        write_image(dir / v.image_path, f.image);
        write_depth_file(dir / v.depth_path, f.depth);
        nlohmann::json e = {{"image", v.image_path},
                            {"depth", v.depth_path},
                            {"width", f.image.width},
                            {"height", f.image.height},
                            {"intrinsics",
                             {{"fx", f.intrinsics.fx}, {"fy", f.intrinsics.fy}, {"cx", f.intrinsics.cx},
                              {"cy", f.intrinsics.cy}}},
                            {"pose", pose_json(f.pose)},
                            {"trajectory", f.view_id.trajectory},
                            {"timestep", f.view_id.timestep}};
        if (v.motion) e["motion"] = std::string(to_string(*v.motion));
        j["views"].push_back(std::move(e));
    }
    j["masks"] = nlohmann::json::array();
    for (std::size_t i = 0; i < masks.size(); ++i) {
        const auto& m = masks[i];
        const auto& e = j["views"].at(m.view);
        const std::string path = "masks/" + fs::path(e["image"].get<std::string>()).stem().string() + "_obj" +
                                 std::to_string(m.mask.object_id) + ext;
        RgbImage img(m.mask.width, m.mask.height);
        for (std::size_t p = 0; p < m.mask.bits.size(); ++p)
            if (m.mask.bits[p]) img.data[3 * p] = img.data[3 * p + 1] = img.data[3 * p + 2] = 255;
        write_image(dir / path, img);
        j["masks"].push_back({{"view", m.view}, {"object_id", m.mask.object_id}, {"label", m.mask.label}, {"path", path}});
    }
    write_text_file(dir / "manifest.json", j.dump(2) + "\n");
}

void write_world_bundle(const fs::path& dir, const WorldSpec& world, const std::vector<AbstractMotion>& motions,
                        const TrajectoryParams& params) {
    std::vector<BundleView> views;
    views.push_back({render_view(world, world.input_pose, ViewId::input()), std::nullopt, {}, {}});
    const ViewFrame input = views.front().frame;
    SyntheticGenerator gen(std::make_shared<const WorldSpec>(world));
    for (auto motion : motions)
        for (const auto& traj : instantiate_trajectories(motion, params))
            for (auto& f : gen.generate(input, traj)) views.push_back({std::move(f), motion, {}, {}});
    std::vector<MaskToWrite> masks;
    for (std::size_t v = 0; v < views.size(); ++v) {
        const auto ids = render_instance_ids(world, views[v].frame.pose, world.intrinsics);
        for (const auto& c : world.cuboids) {
            InstanceMask m(world.intrinsics.width, world.intrinsics.height, c.instance_id, c.label);
            for (std::size_t i = 0; i < ids.size(); ++i) m.bits[i] = ids[i] == c.instance_id ? 1 : 0;
            if (!m.empty()) masks.push_back({v, std::move(m)});
        }
    }
    write_bundle(dir, "synthetic_" + std::to_string(world.seed) + "_" + std::to_string(world.cuboids.size()),
                 world.up_axis, std::move(views), masks);
}

std::vector<ViewFrame> BundleGenerator::generate(const ViewFrame&, const TrajectorySpec& trajectory) const {
    std::vector<ViewFrame> out;
    for (int t = 1; t <= static_cast<int>(trajectory.poses.size()); ++t) {
        const BundleView* hit = nullptr;
        for (const auto& v : bundle_->views) {
            if (v.frame.view_id != ViewId{trajectory.index, t}) continue;
            if (v.motion && *v.motion != trajectory.motion) continue;
            hit = &v;
            break;
        }
        if (!hit) throw MissingViewError(trajectory.index, t);
        out.push_back(hit->frame);
    }
    return out;
}

std::vector<DepthEstimate> BundleDepthEstimator::estimate(std::span<const ViewFrame> frames) const {
    std::vector<DepthEstimate> out;
    for (const auto& f : frames) {
        if (f.depth.width != f.image.width || f.depth.height != f.image.height ||
            f.depth.values.size() != static_cast<std::size_t>(f.image.width) * f.image.height)
            throw BundleFormatError("depth length", "view " + f.view_id.to_string() + " depth does not match its image");
        out.push_back({f.depth, f.intrinsics, f.pose});
    }
    return out;
}

const InstanceMask& BundleSegmenter::cached(std::size_t mask_index) const {
    std::lock_guard lock(mu_);
    auto it = cache_.find(mask_index);
    if (it == cache_.end()) it = cache_.emplace(mask_index, load_mask(*bundle_, bundle_->masks[mask_index])).first;
    return it->second;
}

InstanceMask BundleSegmenter::segment(const ViewFrame& frame, const ObjectHint& hint) const {
    std::size_t input_index = 0;
    for (; input_index < bundle_->views.size(); ++input_index)
        if (bundle_->views[input_index].frame.view_id.is_input()) break;
    const int hx = static_cast<int>(std::lround(hint.center_px.x));
    const int hy = static_cast<int>(std::lround(hint.center_px.y));

    std::optional<int> object;
    std::vector<int> same_label;
    for (std::size_t i = 0; i < bundle_->masks.size(); ++i) {
        const auto& bm = bundle_->masks[i];
        if (bm.view != input_index) continue;
        const auto& m = cached(i);
        if (hx >= 0 && hy >= 0 && hx < m.width && hy < m.height && m.test(hx, hy)) {
            object = bm.object_id;
            break;
        }
        if (bm.label == hint.label) same_label.push_back(bm.object_id);
    }
    if (!object && same_label.size() == 1) object = same_label.front();
    if (!object) throw ObjectNotFoundError(hint.label + " (no stored mask at the hint)");

    const auto view = bundle_->find_view(frame);
    if (!view) throw ObjectNotFoundError(hint.label + " (view " + frame.view_id.to_string() + " not in the bundle)");
    for (std::size_t i = 0; i < bundle_->masks.size(); ++i) {
        const auto& bm = bundle_->masks[i];
        if (bm.view != *view || bm.object_id != *object) continue;
        InstanceMask m = cached(i);
        if (m.empty()) break;
        m.object_id = hint.object_id;
        m.label = hint.label;
        return m;
    }
    throw ObjectNotFoundError(hint.label + " (no mask in view " + frame.view_id.to_string() + ")");
}

SceneSource synthetic_scene(std::shared_ptr<const WorldSpec> world) {
    SceneSource s;
    s.scene_id = "synthetic_" + std::to_string(world->seed) + "_" + std::to_string(world->cuboids.size());
    s.input = render_view(*world, world->input_pose, ViewId::input());
    s.up_axis = world->up_axis;
    s.generator = std::make_shared<SyntheticGenerator>(world);
    s.depth = std::make_shared<SyntheticDepthEstimator>(world);
    s.segmenter = std::make_shared<SyntheticSegmenter>(world);
    s.world = std::move(world);
    return s;
}

SceneSource bundle_scene(std::shared_ptr<const Bundle> bundle) {
    SceneSource s;
    s.scene_id = bundle->scene_id;
    s.input = bundle->input().frame;
    s.up_axis = bundle->up_axis;
    s.generator = std::make_shared<BundleGenerator>(bundle);
    s.depth = std::make_shared<BundleDepthEstimator>();
    s.segmenter = std::make_shared<BundleSegmenter>(bundle);
    s.bundle = std::move(bundle);
    return s;
}

std::vector<ObjectHint> reference_hints(const SceneSource& scene) {
    if (scene.world) return visible_object_hints(*scene.world, scene.world->input_pose, scene.world->intrinsics);
    std::vector<ObjectHint> out;
    if (!scene.bundle) return out;
    std::size_t input_index = 0;
    for (; input_index < scene.bundle->views.size(); ++input_index)
        if (scene.bundle->views[input_index].frame.view_id.is_input()) break;
    for (const auto& bm : scene.bundle->masks) {
        if (bm.view != input_index) continue;
        const auto mask = load_mask(*scene.bundle, bm);
        if (mask.empty()) continue;
        const auto px = fps_sample(erode_mask(mask, 2), 1).front();
        out.push_back({bm.label, {double(px.x), double(px.y)}, bm.object_id});
    }
    return out;
}

SceneSource open_scene(const std::string& ref, const fs::path& base_dir) {
    if (auto syn = parse_synthetic_ref(ref))
        return synthetic_scene(std::make_shared<const WorldSpec>(generate_world(syn->first, syn->second)));
    fs::path p(ref);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    return bundle_scene(std::make_shared<const Bundle>(load_bundle(p)));
}

}  // namespace sandbox3d
