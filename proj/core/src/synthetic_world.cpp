#include "sandbox3d/synthetic_world.hpp"

#include "sandbox3d/errors.hpp"
#include "sandbox3d/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <stdexcept>

namespace sandbox3d {

namespace {

constexpr Rgb kGroundColor = {150, 150, 150};
constexpr Rgb kSkyColor = {190, 215, 240};
constexpr std::size_t kMinVisiblePixels = 20;

// Separating-axis test on the ground footprints, each grown by gap / 2.
bool footprints_overlap(const CuboidSpec& a, const CuboidSpec& b, double gap) {
    auto corners = [&](const CuboidSpec& c) {
        const Mat3 r = yaw_rotation(c.yaw_deg);
        const Vec2 ax(r(0, 0), r(2, 0));
        const Vec2 az(r(0, 2), r(2, 2));
        const double hx = c.size.x() / 2 + gap / 2, hz = c.size.z() / 2 + gap / 2;
        const Vec2 o(c.center.x(), c.center.z());
        return std::array<Vec2, 4>{o + hx * ax + hz * az, o + hx * ax - hz * az, o - hx * ax + hz * az,
                                   o - hx * ax - hz * az};
    };
    const auto ca = corners(a), cb = corners(b);
    for (const auto* poly : {&ca, &cb}) {
        for (int e = 0; e < 2; ++e) {
            const Vec2 edge = e == 0 ? ((*poly)[0] - (*poly)[2]) : ((*poly)[0] - (*poly)[1]);
            const Vec2 n(-edge.y(), edge.x());
            double amin = std::numeric_limits<double>::infinity(), amax = -amin, bmin = amin, bmax = -amin;
            for (const auto& p : ca) {
                amin = std::min(amin, n.dot(p));
                amax = std::max(amax, n.dot(p));
            }
            for (const auto& p : cb) {
                bmin = std::min(bmin, n.dot(p));
                bmax = std::max(bmax, n.dot(p));
            }
            if (amax < bmin || bmax < amin) return false;
        }
    }
    return true;
}

bool inside_frustum(const CuboidSpec& c, const CameraPose& pose, const CameraIntrinsics& intr) {
    for (const auto& p : box_corners(c.box())) {
        const auto pr = project(p, intr, pose);
        if (!pr || pr->depth < 0.5) return false;
        if (pr->pixel.x < 2.0 || pr->pixel.y < 2.0 || pr->pixel.x > intr.width - 3.0 || pr->pixel.y > intr.height - 3.0)
            return false;
    }
    return true;
}

Vec3 ray_direction(const Pixel& u, const CameraIntrinsics& intr, const CameraPose& pose) {
    return pose.rotation * Vec3((u.x - intr.cx) / intr.fx, (u.y - intr.cy) / intr.fy, 1.0);
}

std::optional<double> slab_hit(const OrientedBox3& box, const Vec3& origin, const Vec3& dir) {
    const Vec3 o = box.to_local(origin);
    const Vec3 d = box.axes.transpose() * dir;
    double t_near = -std::numeric_limits<double>::infinity();
    double t_far = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
        const double h = box.half_extents[i];
        if (d[i] == 0.0) {
            if (o[i] < -h || o[i] > h) return std::nullopt;
            continue;
        }
        double t0 = (-h - o[i]) / d[i];
        double t1 = (h - o[i]) / d[i];
        if (t0 > t1) std::swap(t0, t1);
        t_near = std::max(t_near, t0);
        t_far = std::min(t_far, t1);
        if (t_near > t_far) return std::nullopt;
    }
    if (t_near <= 0.0) return std::nullopt;  // camera inside or box behind
    return t_near;
}

}  // namespace

OrientedBox3 CuboidSpec::box() const {
    OrientedBox3 b;
    b.center = center;
    b.axes = yaw_rotation(yaw_deg);
    b.half_extents = size / 2.0;
    b.label = label;
    b.instance_id = instance_id;
    return b;
}

const CuboidSpec* WorldSpec::find(int instance_id) const {
    for (const auto& c : cuboids)
        if (c.instance_id == instance_id) return &c;
    return nullptr;
}

std::string WorldSpec::scene_ref() const {
    return "synthetic:" + std::to_string(seed) + ":" + std::to_string(cuboids.size());
}

const std::vector<std::string>& label_vocabulary() {
    static const std::vector<std::string> vocab = {"chair", "table", "sofa",  "lamp",  "cabinet",
                                                   "plant", "bed",   "desk",  "crate", "shelf"};
    return vocab;
}

WorldSpec generate_world(unsigned seed, int k, const WorldBounds& bounds) {
    if (k < 1 || k > 8) throw std::invalid_argument("generate_world: object count must be in [1, 8]");
    WorldSpec w;
    w.seed = seed;
    w.intrinsics = CameraIntrinsics::from_horizontal_fov(bounds.width, bounds.height, bounds.hfov_deg);
    w.input_pose.translation = Vec3(0.0, -bounds.camera_height, 0.0);

    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> size_d(bounds.min_size, bounds.max_size);
    std::uniform_real_distribution<double> yaw_d(-45.0, 45.0);
    std::uniform_real_distribution<double> x_d(bounds.x_min, bounds.x_max);
    std::uniform_real_distribution<double> z_d(bounds.z_min, bounds.z_max);
    std::uniform_int_distribution<std::size_t> label_d(0, label_vocabulary().size() - 1);

    for (int i = 0; i < k; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < bounds.attempts_per_object && !placed; ++attempt) {
            CuboidSpec c;
            c.size = Vec3(size_d(rng), size_d(rng), size_d(rng));
            c.yaw_deg = yaw_d(rng);
            c.center = Vec3(x_d(rng), -c.size.y() / 2.0, z_d(rng));
            c.label = label_vocabulary()[label_d(rng)];
            c.instance_id = i;
            if (!inside_frustum(c, w.input_pose, w.intrinsics)) continue;
            bool clear = true;
            for (const auto& other : w.cuboids)
                if (footprints_overlap(c, other, bounds.min_gap)) {
                    clear = false;
                    break;
                }
            if (!clear) continue;
            w.cuboids.push_back(std::move(c));
            placed = true;
        }
        if (!placed) throw GenerationError(seed, k);
    }
    return w;
}

std::optional<std::pair<unsigned, int>> parse_synthetic_ref(const std::string& ref) {
    const std::string prefix = "synthetic:";
    if (ref.rfind(prefix, 0) != 0) return std::nullopt;
    const auto rest = ref.substr(prefix.size());
    const auto colon = rest.find(':');
    if (colon == std::string::npos) return std::nullopt;
    try {
        return std::make_pair(static_cast<unsigned>(std::stoul(rest.substr(0, colon))),
                              std::stoi(rest.substr(colon + 1)));
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::optional<double> cuboid_hit_depth(const CuboidSpec& cuboid, const Pixel& u, const CameraIntrinsics& intr,
                                       const CameraPose& pose) {
    return slab_hit(cuboid.box(), pose.translation, ray_direction(u, intr, pose));
}

namespace {

// Boxes built once per raster instead of once per ray.
struct PreparedWorld {
    std::vector<OrientedBox3> boxes;
    Vec3 up;

    explicit PreparedWorld(const WorldSpec& w) : up(w.up_axis.normalized()) {
        for (const auto& c : w.cuboids) boxes.push_back(c.box());
    }

    PixelHit trace(const Vec3& origin, const Vec3& dir) const {
        PixelHit hit{std::numeric_limits<double>::infinity(), PixelHit::kNoHit};
        // Ground plane: up-coordinate 0.
        const double rate = dir.dot(up);
        if (rate < 0.0) {
            const double s = -origin.dot(up) / rate;
            if (s > 0.0) hit = {s, PixelHit::kGround};
        }
        for (const auto& b : boxes)
            if (auto s = slab_hit(b, origin, dir); s && *s < hit.depth) hit = {*s, b.instance_id};
        return hit;
    }
};

template <class Fn>
void for_each_pixel_hit(const WorldSpec& world, const CameraPose& pose, const CameraIntrinsics& intr, Fn&& fn) {
    const PreparedWorld prepared(world);
    for (int y = 0; y < intr.height; ++y)
        for (int x = 0; x < intr.width; ++x)
            fn(x, y, prepared.trace(pose.translation, ray_direction({double(x), double(y)}, intr, pose)));
}

}  // namespace

PixelHit trace_pixel(const WorldSpec& world, const Pixel& u, const CameraIntrinsics& intr, const CameraPose& pose) {
    return PreparedWorld(world).trace(pose.translation, ray_direction(u, intr, pose));
}

DepthGrid render_depth(const WorldSpec& world, const CameraPose& pose, const CameraIntrinsics& intr) {
    DepthGrid g(intr.width, intr.height);
    for_each_pixel_hit(world, pose, intr, [&](int x, int y, const PixelHit& h) {
        if (h.instance_id != PixelHit::kNoHit) g.at(x, y) = static_cast<float>(h.depth);
    });
    return g;
}

std::vector<int> render_instance_ids(const WorldSpec& world, const CameraPose& pose, const CameraIntrinsics& intr) {
    std::vector<int> ids(static_cast<std::size_t>(intr.width) * intr.height, PixelHit::kNoHit);
    for_each_pixel_hit(world, pose, intr, [&](int x, int y, const PixelHit& h) {
        ids[static_cast<std::size_t>(y) * intr.width + x] = h.instance_id;
    });
    return ids;
}

InstanceMask render_instance_mask(const WorldSpec& world, const CameraPose& pose, const CameraIntrinsics& intr,
                                  int instance_id) {
    const auto* c = world.find(instance_id);
    if (!c) throw std::out_of_range("unknown instance " + std::to_string(instance_id));
    const auto ids = render_instance_ids(world, pose, intr);
    InstanceMask m(intr.width, intr.height, instance_id, c->label);
    for (std::size_t i = 0; i < ids.size(); ++i) m.bits[i] = ids[i] == instance_id ? 1 : 0;
    return m;
}

namespace {

Rgb shade(int id) { return id == PixelHit::kNoHit ? kSkyColor : id == PixelHit::kGround ? kGroundColor : palette_for(id).color; }

}  // namespace

RgbImage render_rgb(const WorldSpec& world, const CameraPose& pose, const CameraIntrinsics& intr) {
    RgbImage img(intr.width, intr.height);
    for_each_pixel_hit(world, pose, intr, [&](int x, int y, const PixelHit& h) { img.set(x, y, shade(h.instance_id)); });
    return img;
}

ViewFrame render_view(const WorldSpec& world, const CameraPose& pose, const ViewId& id) {
    ViewFrame f;
    f.image = RgbImage(world.intrinsics.width, world.intrinsics.height);
    f.depth = DepthGrid(world.intrinsics.width, world.intrinsics.height);
    for_each_pixel_hit(world, pose, world.intrinsics, [&](int x, int y, const PixelHit& h) {
        f.image.set(x, y, shade(h.instance_id));
        if (h.instance_id != PixelHit::kNoHit) f.depth.at(x, y) = static_cast<float>(h.depth);
    });
    f.intrinsics = world.intrinsics;
    f.pose = pose;
    f.view_id = id;
    return f;
}

std::vector<ObjectHint> visible_object_hints(const WorldSpec& world, const CameraPose& pose,
                                             const CameraIntrinsics& intr) {
    const auto ids = render_instance_ids(world, pose, intr);
    std::vector<ObjectHint> hints;
    for (const auto& c : world.cuboids) {
        InstanceMask m(intr.width, intr.height, c.instance_id, c.label);
        for (std::size_t i = 0; i < ids.size(); ++i) m.bits[i] = ids[i] == c.instance_id ? 1 : 0;
        if (m.count() < kMinVisiblePixels) continue;
        const auto seed = fps_sample(erode_mask(m, 2), 1).front();
        hints.push_back({c.label, {double(seed.x), double(seed.y)}, c.instance_id});
    }
    return hints;
}

Layout world_layout(const WorldSpec& world) {
    std::map<std::string, int> count;
    for (const auto& c : world.cuboids) ++count[c.label];
    Layout out;
    for (const auto& c : world.cuboids)
        if (count[c.label] == 1) out[c.label] = world.input_pose.to_camera(c.center);
    return out;
}

namespace {

QuestionIntent intent_from_spec(const nlohmann::json& spec) {
    try {
        const auto t = template_from_string(spec.at("template").get<std::string>());
        if (!t) throw std::invalid_argument("unknown template");
        return {*t, spec.at("a").get<std::string>(), spec.at("b").get<std::string>(),
                spec.value("distance", 0.0)};
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("malformed question spec: ") + e.what());
    }
}

std::vector<std::string> direction_distractors(QuestionTemplate t) {
    if (t == QuestionTemplate::perspective) return {"directly in front of you", "directly behind you"};
    return {"directly above", "directly below"};
}

}  // namespace

char oracle_answer(const WorldSpec& world, const QARecord& question) {
    if (question.spec.is_null()) throw std::invalid_argument("question " + question.id + " has no template spec");
    const auto intent = intent_from_spec(question.spec);
    const auto truth = evaluate_intent(intent, world_layout(world));
    if (!truth) throw std::invalid_argument("question " + question.id + " refers to objects not in the world");
    const auto letter = letter_of(question.choices, *truth);
    if (!letter) throw std::invalid_argument("question " + question.id + " has no choice '" + *truth + "'");
    return *letter;
}

std::vector<QARecord> generate_questions(const WorldSpec& world, int n, unsigned seed,
                                         const QuestionOptions& options) {
    const Layout layout = world_layout(world);
    std::vector<std::string> names;
    for (const auto& [label, _] : layout) names.push_back(label);
    std::set<std::string> present;
    for (const auto& c : world.cuboids) present.insert(c.label);
    std::vector<std::string> spare;
    for (const auto& l : label_vocabulary())
        if (!present.count(l)) spare.push_back(l);
    if (names.size() < 2 || spare.size() < 2) throw GenerationError(world.seed, static_cast<int>(world.cuboids.size()));

    std::mt19937 rng(seed * 2654435761u + world.seed);
    std::vector<QARecord> out;
    for (int i = 0; i < n; ++i) {
        const auto kind = kAllTemplates[static_cast<std::size_t>(i) % kAllTemplates.size()];
        std::optional<QuestionIntent> chosen;
        for (int attempt = 0; attempt < options.attempts && !chosen; ++attempt) {
            std::uniform_int_distribution<std::size_t> pick(0, names.size() - 1);
            const auto ia = pick(rng);
            auto ib = pick(rng);
            if (ia == ib) continue;
            QuestionIntent q{kind, names[ia], names[ib], 0.0};
            if (kind == QuestionTemplate::ego_movement) {
                q.distance_m = 0.5 * std::uniform_int_distribution<int>(1, 6)(rng);
            } else if (kind == QuestionTemplate::object_movement) {
                const double mag = 0.5 * std::uniform_int_distribution<int>(2, 6)(rng);
                q.distance_m = std::uniform_int_distribution<int>(0, 1)(rng) ? mag : -mag;
            }
            const auto margin = intent_margin(q, layout);
            if (margin && *margin >= options.min_margin_m) chosen = q;
        }
        if (!chosen) throw GenerationError(world.seed, static_cast<int>(world.cuboids.size()));

        QARecord r;
        r.id = "s" + std::to_string(world.seed) + "_q" + std::to_string(i);
        r.scene_ref = world.scene_ref();
        r.question = question_text(*chosen);
        r.category = std::string(to_string(kind));
        r.spec = {{"template", r.category}, {"a", chosen->a}, {"b", chosen->b}, {"distance", chosen->distance_m}};
        if (kind == QuestionTemplate::closer_farther || kind == QuestionTemplate::ego_movement) {
            std::vector<std::string> extra = spare;
            std::shuffle(extra.begin(), extra.end(), rng);
            r.choices = {"the " + chosen->a, "the " + chosen->b, "the " + extra[0], "the " + extra[1]};
        } else {
            r.choices = {"left", "right"};
            for (auto& d : direction_distractors(kind)) r.choices.push_back(d);
        }
        std::shuffle(r.choices.begin(), r.choices.end(), rng);
        r.gold = oracle_answer(world, r);
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<QARecord> make_synthetic_benchmark(int n_questions, unsigned base_seed, int per_world, int min_objects,
                                               int max_objects) {
    std::vector<QARecord> out;
    const int span = max_objects - min_objects + 1;
    for (unsigned seed = base_seed; static_cast<int>(out.size()) < n_questions; ++seed) {
        if (seed - base_seed > static_cast<unsigned>(100 * n_questions + 1000))
            throw Error("synthetic benchmark: too many unusable worlds");
        const int k = min_objects + static_cast<int>(seed % static_cast<unsigned>(span));
        try {
            const auto world = generate_world(seed, k);
            auto qs = generate_questions(world, per_world, seed);
            for (auto& q : qs) {
                if (static_cast<int>(out.size()) >= n_questions) break;
                out.push_back(std::move(q));
            }
        } catch (const GenerationError&) {
            continue;
        }
    }
    return out;
}

}  // namespace sandbox3d
