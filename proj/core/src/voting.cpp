#include "sandbox3d/voting.hpp"

#include "sandbox3d/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace sandbox3d {

namespace {

struct CellKey {
    std::int64_t x, y, z;
    bool operator==(const CellKey&) const = default;
};

struct CellHash {
    std::size_t operator()(const CellKey& k) const noexcept {
        std::uint64_t h = static_cast<std::uint64_t>(k.x) * 73856093ULL;
        h ^= static_cast<std::uint64_t>(k.y) * 19349663ULL;
        h ^= static_cast<std::uint64_t>(k.z) * 83492791ULL;
        return static_cast<std::size_t>(h);
    }
};

// Uniform hash grid; a radius query visits the 27 cells around the query cell,
// which covers every point within `cell` of it.
class PointGrid {
public:
    PointGrid(std::span<const Vec3> points, double cell) : points_(points), cell_(cell) {
        for (std::size_t i = 0; i < points.size(); ++i) cells_[key(points[i])].push_back(i);
    }

    template <typename Fn>
    void for_each_candidate(const Vec3& p, Fn&& fn) const {
        const CellKey c = key(p);
        for (std::int64_t dz = -1; dz <= 1; ++dz)
            for (std::int64_t dy = -1; dy <= 1; ++dy)
                for (std::int64_t dx = -1; dx <= 1; ++dx) {
                    auto it = cells_.find({c.x + dx, c.y + dy, c.z + dz});
                    if (it == cells_.end()) continue;
                    for (std::size_t j : it->second) fn(j);
                }
    }

private:
    CellKey key(const Vec3& p) const {
        return {static_cast<std::int64_t>(std::floor(p.x() / cell_)),
                static_cast<std::int64_t>(std::floor(p.y() / cell_)),
                static_cast<std::int64_t>(std::floor(p.z() / cell_))};
    }

    std::span<const Vec3> points_;
    double cell_;
    std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> cells_;
};

std::map<std::string, std::vector<std::size_t>> group_by_label(const ProxyCloud& cloud) {
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < cloud.points.size(); ++i) groups[cloud.points[i].label].push_back(i);
    return groups;
}

int largest_component(const Vec3& v) {
    int best = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(v[i]) > std::abs(v[best])) best = i;
    return best;
}

// Product of the extents along basis columns [first, first+count), or their sum.
double extent_cost(const std::vector<Vec3>& centered, const Mat3& basis, int first, int count, bool sum) {
    double lo[3] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                    std::numeric_limits<double>::infinity()};
    double hi[3] = {-lo[0], -lo[1], -lo[2]};
    for (const auto& p : centered)
        for (int k = 0; k < count; ++k) {
            const double s = basis.col(first + k).dot(p);
            lo[k] = std::min(lo[k], s);
            hi[k] = std::max(hi[k], s);
        }
    double prod = 1.0, total = 0.0;
    for (int k = 0; k < count; ++k) {
        prod *= hi[k] - lo[k];
        total += hi[k] - lo[k];
    }
    return sum ? total : prod;
}

Mat3 rotation_in_plane(double deg) {
    const double r = deg_to_rad(deg);
    Mat3 m = Mat3::Identity();
    m(0, 0) = std::cos(r);
    m(1, 0) = std::sin(r);
    m(0, 1) = -std::sin(r);
    m(1, 1) = std::cos(r);
    return m;
}

Mat3 rotation_zyx(double a, double b, double c) {
    return (Eigen::AngleAxisd(deg_to_rad(a), Vec3::UnitZ()) * Eigen::AngleAxisd(deg_to_rad(b), Vec3::UnitY()) *
            Eigen::AngleAxisd(deg_to_rad(c), Vec3::UnitX()))
        .toRotationMatrix();
}

// Rotates basis columns [first, first+count) within their span so the box
// extents along them are minimal (by product, or by sum when `sum` is set).
// Ties keep the earliest candidate, so a zero-extent group leaves the basis
// unchanged.
void refine_degenerate_group(const std::vector<Vec3>& centered, Mat3& basis, int first, int count,
                             bool sum = false) {
    if (count < 2) return;
    Eigen::Matrix<double, 3, Eigen::Dynamic> sub = basis.middleCols(first, count);
    auto candidate = [&](const Mat3& q) {
        Mat3 b = basis;
        b.middleCols(first, count) = sub * q.topLeftCorner(count, count);
        return b;
    };
    auto cost = [&](const Mat3& q) { return extent_cost(centered, candidate(q), first, count, sum); };

    Mat3 best_q = Mat3::Identity();
    double best = cost(best_q);
    if (count == 2) {
        double best_deg = 0.0;
        for (int i = 1; i < 90; ++i) {
            const double c = cost(rotation_in_plane(i));
            if (c < best) {
                best = c;
                best_deg = i;
            }
        }
        for (double step = 0.5; step >= 1e-4; step *= 0.5) {
            for (double d : {best_deg - step, best_deg + step}) {
                const double c = cost(rotation_in_plane(d));
                if (c < best) {
                    best = c;
                    best_deg = d;
                }
            }
        }
        best_q = rotation_in_plane(best_deg);
    } else {
        Vec3 best_abc = Vec3::Zero();
        for (int a = 0; a < 90; a += 6)
            for (int b = -90; b < 90; b += 6)
                for (int c = 0; c < 90; c += 6) {
                    const double v = cost(rotation_zyx(a, b, c));
                    if (v < best) {
                        best = v;
                        best_abc = Vec3(a, b, c);
                    }
                }
        for (double step = 3.0; step >= 1e-3; step *= 0.5) {
            bool improved = true;
            while (improved) {
                improved = false;
                for (int k = 0; k < 3; ++k)
                    for (double s : {-step, step}) {
                        Vec3 trial = best_abc;
                        trial[k] += s;
                        const double v = cost(rotation_zyx(trial[0], trial[1], trial[2]));
                        if (v < best) {
                            best = v;
                            best_abc = trial;
                            improved = true;
                        }
                    }
            }
        }
        best_q = rotation_zyx(best_abc[0], best_abc[1], best_abc[2]);
    }
    basis = candidate(best_q);

    // Restore descending-variance order inside the group.
    std::vector<std::pair<double, int>> var;
    for (int k = 0; k < count; ++k) {
        double s2 = 0.0;
        for (const auto& p : centered) {
            const double s = basis.col(first + k).dot(p);
            s2 += s * s;
        }
        var.push_back({s2, first + k});
    }
    std::stable_sort(var.begin(), var.end(), [](const auto& l, const auto& r) { return l.first > r.first; });
    const Mat3 copy = basis;
    for (int k = 0; k < count; ++k) basis.col(first + k) = copy.col(var[k].second);
}

}  // namespace

bool agree(const Vec3& p, std::span<const Vec3> view_points, double delta) {
    const double d2 = delta * delta;
    for (const auto& q : view_points)
        if ((q - p).squaredNorm() < d2) return true;
    return false;
}

ProxyCloud filter_by_consensus(const ProxyCloud& cloud, const ConsensusParams& params) {
    if (!(params.delta > 0.0) || params.n_agree < 1)
        throw std::invalid_argument("consensus params: need delta > 0 and n_agree >= 1");
    std::vector<bool> keep(cloud.points.size(), false);
    const double d2 = params.delta * params.delta;
    for (const auto& [label, idx] : group_by_label(cloud)) {
        std::vector<Vec3> pts;
        std::map<ViewId, int> view_index;
        std::vector<int> views;
        for (auto i : idx) {
            pts.push_back(cloud.points[i].xyz);
            auto [it, _] = view_index.emplace(cloud.points[i].view_id, static_cast<int>(view_index.size()));
            views.push_back(it->second);
        }
        const PointGrid grid(pts, params.delta);
        std::vector<char> seen(view_index.size(), 0);
        std::vector<int> touched;
        for (std::size_t a = 0; a < pts.size(); ++a) {
            int agreeing = 0;
            grid.for_each_candidate(pts[a], [&](std::size_t b) {
                const int v = views[b];
                if (v == views[a] || seen[v]) return;
                if ((pts[b] - pts[a]).squaredNorm() < d2) {
                    seen[v] = 1;
                    touched.push_back(v);
                    ++agreeing;
                }
            });
            for (int v : touched) seen[v] = 0;
            touched.clear();
            if (agreeing >= params.n_agree) keep[idx[a]] = true;
        }
    }
    ProxyCloud out;
    for (std::size_t i = 0; i < cloud.points.size(); ++i)
        if (keep[i]) out.points.push_back(cloud.points[i]);
    return out;
}

std::vector<int> dbscan(std::span<const Vec3> points, double eps, int min_pts) {
    constexpr int kUnvisited = -2;
    std::vector<int> labels(points.size(), kUnvisited);
    if (points.empty()) return labels;
    const PointGrid grid(points, eps);
    const double e2 = eps * eps;
    std::vector<std::size_t> nbrs;
    auto neighbours = [&](std::size_t i) {
        nbrs.clear();
        grid.for_each_candidate(points[i], [&](std::size_t j) {
            if ((points[j] - points[i]).squaredNorm() <= e2) nbrs.push_back(j);
        });
    };

    int cluster = 0;
    std::vector<std::size_t> seeds;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (labels[i] != kUnvisited) continue;
        neighbours(i);
        if (static_cast<int>(nbrs.size()) < min_pts) {
            labels[i] = kNoise;
            continue;
        }
        labels[i] = cluster;
        seeds.assign(nbrs.begin(), nbrs.end());
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            const std::size_t q = seeds[s];
            if (labels[q] == kNoise) labels[q] = cluster;
            if (labels[q] != kUnvisited) continue;
            labels[q] = cluster;
            neighbours(q);
            if (static_cast<int>(nbrs.size()) >= min_pts) seeds.insert(seeds.end(), nbrs.begin(), nbrs.end());
        }
        ++cluster;
    }
    return labels;
}

SymmetricEigen jacobi_eigen(const Mat3& m) {
    Mat3 a = 0.5 * (m + m.transpose());
    Mat3 v = Mat3::Identity();
    for (int sweep = 0; sweep < 64; ++sweep) {
        const double off = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
        const double scale = a.diagonal().squaredNorm();
        if (off <= 1e-30 * scale || off == 0.0) break;
        for (int p = 0; p < 2; ++p)
            for (int q = p + 1; q < 3; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                Mat3 j = Mat3::Identity();
                j(p, p) = c;
                j(q, q) = c;
                j(p, q) = s;
                j(q, p) = -s;
                a = j.transpose() * a * j;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                v = v * j;
            }
    }
    std::array<int, 3> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int l, int r) { return a(l, l) > a(r, r); });
    SymmetricEigen out;
    for (int k = 0; k < 3; ++k) {
        out.values[k] = a(order[k], order[k]);
        out.vectors.col(k) = v.col(order[k]);
    }
    return out;
}

OrientedBox3 fit_obb(std::span<const Vec3> cluster, const std::string& label, int instance_id, double min_extent,
                     const ObbOptions& options) {
    if (cluster.empty()) throw std::invalid_argument("fit_obb: empty cluster");
    Vec3 mean = Vec3::Zero();
    for (const auto& p : cluster) mean += p;
    mean /= static_cast<double>(cluster.size());
    std::vector<Vec3> centered;
    centered.reserve(cluster.size());
    Mat3 cov = Mat3::Zero();
    for (const auto& p : cluster) {
        centered.push_back(p - mean);
        cov += centered.back() * centered.back().transpose();
    }
    cov /= static_cast<double>(cluster.size());

    const auto eig = jacobi_eigen(cov);
    Mat3 axes = eig.vectors;

    if (options.up_axis && options.up_axis->norm() > 0.0) {
        const Vec3 up = options.up_axis->normalized();
        // Seed the horizontal pair from the leading horizontal PCA direction.
        Vec3 e1 = Vec3::Zero();
        for (int k = 0; k < 3 && e1.norm() < 1e-6; ++k) e1 = eig.vectors.col(k) - eig.vectors.col(k).dot(up) * up;
        if (e1.norm() < 1e-6) e1 = up.unitOrthogonal();
        e1.normalize();
        axes.col(0) = e1;
        axes.col(1) = up.cross(e1);
        axes.col(2) = up;
        // Minimum perimeter: an L of two visible faces has a second
        // minimum-area rectangle along its diagonal.
        refine_degenerate_group(centered, axes, 0, 2, true);
        std::array<std::pair<double, int>, 3> var;
        for (int k = 0; k < 3; ++k) {
            double s2 = 0.0;
            for (const auto& p : centered) s2 += std::pow(axes.col(k).dot(p), 2);
            var[k] = {s2, k};
        }
        std::stable_sort(var.begin(), var.end(), [](const auto& l, const auto& r) { return l.first > r.first; });
        const Mat3 copy = axes;
        for (int k = 0; k < 3; ++k) axes.col(k) = copy.col(var[k].second);
    } else {
        const double scale = std::max(eig.values[0], 0.0);
        int start = 0;
        for (int k = 1; k <= 3; ++k) {
            const bool split = k == 3 || (eig.values[k - 1] - eig.values[k]) > options.degeneracy_tolerance * scale;
            if (split) {
                refine_degenerate_group(centered, axes, start, k - start);
                start = k;
            }
        }
    }

    for (int k = 0; k < 2; ++k) {
        Vec3 a = axes.col(k).normalized();
        if (a[largest_component(a)] < 0.0) a = -a;
        axes.col(k) = a;
    }
    // Re-orthogonalise the second axis against the first before closing the frame.
    Vec3 a1 = axes.col(1) - axes.col(0).dot(axes.col(1)) * axes.col(0);
    a1.normalize();
    axes.col(1) = a1;
    axes.col(2) = axes.col(0).cross(axes.col(1));

    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (const auto& c : centered) {
        const Vec3 s = axes.transpose() * c;
        lo = lo.cwiseMin(s);
        hi = hi.cwiseMax(s);
    }
    OrientedBox3 box;
    box.axes = axes;
    box.half_extents = ((hi - lo) * 0.5).cwiseMax(Vec3::Constant(min_extent));
    box.center = mean + axes * ((hi + lo) * 0.5);
    box.label = label;
    box.instance_id = instance_id;
    return box;
}

ProxyCloud remove_knn_outliers(const ProxyCloud& cloud, int k, double std_ratio) {
    if (k <= 0) return cloud;
    std::vector<bool> keep(cloud.points.size(), true);
    for (const auto& [label, idx] : group_by_label(cloud)) {
        if (idx.size() <= static_cast<std::size_t>(k)) continue;
        std::vector<double> mean_d(idx.size());
        std::vector<double> d;
        for (std::size_t a = 0; a < idx.size(); ++a) {
            d.clear();
            for (std::size_t b = 0; b < idx.size(); ++b)
                if (a != b) d.push_back((cloud.points[idx[a]].xyz - cloud.points[idx[b]].xyz).norm());
            std::partial_sort(d.begin(), d.begin() + k, d.end());
            mean_d[a] = std::accumulate(d.begin(), d.begin() + k, 0.0) / k;
        }
        const double mu = std::accumulate(mean_d.begin(), mean_d.end(), 0.0) / mean_d.size();
        double var = 0.0;
        for (double v : mean_d) var += (v - mu) * (v - mu);
        const double sigma = std::sqrt(var / mean_d.size());
        for (std::size_t a = 0; a < idx.size(); ++a)
            if (mean_d[a] > mu + std_ratio * sigma) keep[idx[a]] = false;
    }
    ProxyCloud out;
    for (std::size_t i = 0; i < cloud.points.size(); ++i)
        if (keep[i]) out.points.push_back(cloud.points[i]);
    return out;
}

SandboxScene build_sandbox(const ProxyCloud& cloud, const ConsensusParams& consensus, const ClusterParams& cluster,
                           const CameraPose& origin_pose, const CameraIntrinsics& origin_intrinsics,
                           const Vec3& up_axis, SandboxDiagnostics* diagnostics) {
    SandboxDiagnostics diag;
    diag.input_points = cloud.size();
    const ProxyCloud voted = filter_by_consensus(cloud, consensus);
    diag.after_consensus = voted.size();
    const ProxyCloud cleaned = remove_knn_outliers(voted, cluster.knn_k, cluster.knn_std_ratio);
    diag.after_outlier_filter = cleaned.size();

    SandboxScene scene;
    scene.origin_pose = origin_pose;
    scene.origin_intrinsics = origin_intrinsics;
    scene.up_axis = up_axis.normalized();

    int next_id = 0;
    for (const auto& [label, idx] : group_by_label(cleaned)) {
        std::vector<Vec3> pts;
        pts.reserve(idx.size());
        for (auto i : idx) pts.push_back(cleaned.points[i].xyz);
        const auto labels = dbscan(pts, cluster.eps, cluster.min_pts);

        std::map<int, std::vector<Vec3>> members;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (labels[i] == kNoise)
                ++diag.noise_points;
            else
                members[labels[i]].push_back(pts[i]);
        }
        struct Candidate {
            std::vector<Vec3> points;
            Vec3 centroid;
        };
        std::vector<Candidate> kept;
        for (auto& [id, m] : members) {
            if (static_cast<int>(m.size()) < cluster.min_cluster_size) {
                ++diag.dropped_small_clusters;
                continue;
            }
            Vec3 c = Vec3::Zero();
            for (const auto& p : m) c += p;
            c /= static_cast<double>(m.size());
            kept.push_back({std::move(m), c});
        }
        std::stable_sort(kept.begin(), kept.end(), [](const Candidate& l, const Candidate& r) {
            if (l.points.size() != r.points.size()) return l.points.size() > r.points.size();
            return std::lexicographical_compare(l.centroid.data(), l.centroid.data() + 3, r.centroid.data(),
                                                r.centroid.data() + 3);
        });
        ObbOptions obb;
        if (cluster.gravity_aligned) obb.up_axis = scene.up_axis;
        for (const auto& c : kept)
            scene.boxes.push_back(fit_obb(c.points, label, next_id++, cluster.min_extent, obb));
    }
    if (diagnostics) *diagnostics = diag;
    if (scene.boxes.empty()) throw EmptySandboxError();
    return scene;
}

}  // namespace sandbox3d
