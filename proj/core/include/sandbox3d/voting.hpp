#pragma once

// Cross-view consensus voting, DBSCAN instance separation and PCA box fitting.

#include "sandbox3d/geometry.hpp"

#include <optional>
#include <span>
#include <vector>

namespace sandbox3d {

struct ConsensusParams {
    double delta = 0.10;  // metres, strict
    int n_agree = 2;      // distinct other views that must agree
};

struct ClusterParams {
    double eps = 0.4;
    int min_pts = 5;
    int min_cluster_size = 8;
    double min_extent = 0.01;
    // Optional statistical outlier removal before DBSCAN: drop points whose mean
    // distance to their k nearest same-category neighbours exceeds
    // mean + knn_std_ratio * stddev. Disabled when knn_k == 0.
    int knn_k = 0;
    double knn_std_ratio = 2.0;
    // Fit boxes with one axis along the scene up axis and the horizontal pair
    // minimising the footprint perimeter. Plain PCA tilts boxes when only the
    // camera-facing surfaces are sampled.
    bool gravity_aligned = true;
};

// True iff some point of `view_points` lies strictly closer than delta.
bool agree(const Vec3& p, std::span<const Vec3> view_points, double delta);

// Keeps a point iff at least n_agree views other than its own contain a point
// of the same category within delta. Output preserves input order.
ProxyCloud filter_by_consensus(const ProxyCloud& cloud, const ConsensusParams& params);

inline constexpr int kNoise = -1;

// Neighbourhoods are inclusive (dist <= eps) and count the point itself.
// Clusters are numbered in order of their lowest-index core point; a border
// point belongs to the first cluster that reaches it.
std::vector<int> dbscan(std::span<const Vec3> points, double eps, int min_pts);

struct SymmetricEigen {
    Vec3 values;   // descending
    Mat3 vectors;  // columns match values
};

// Cyclic Jacobi rotations on a symmetric 3x3 matrix.
SymmetricEigen jacobi_eigen(const Mat3& m);

struct ObbOptions {
    // Eigenvalues closer than this fraction of the largest are treated as one
    // degenerate eigenspace; inside it the rotation that minimises the box
    // extents is chosen instead of an arbitrary eigenbasis.
    double degeneracy_tolerance = 0.1;
    // When set, one axis is fixed to this direction (either sign) and the
    // other two span the minimum-perimeter rectangle of the projected points.
    std::optional<Vec3> up_axis;
};

// PCA-aligned box: axes sorted by descending variance, each axis signed so its
// largest-magnitude component is positive, third axis = first x second.
// Half extents are floored at min_extent. Throws std::invalid_argument on an
// empty cluster.
OrientedBox3 fit_obb(std::span<const Vec3> cluster, const std::string& label, int instance_id,
                     double min_extent, const ObbOptions& options = {});

struct SandboxDiagnostics {
    std::size_t input_points = 0;
    std::size_t after_consensus = 0;
    std::size_t after_outlier_filter = 0;
    std::size_t noise_points = 0;
    std::size_t dropped_small_clusters = 0;
};

// Per category: consensus filter, optional k-NN outlier filter, DBSCAN, size
// filter, box fit (gravity-aligned unless disabled). Instance ids follow (category, cluster size descending,
// centroid lexicographic). Throws EmptySandboxError.
SandboxScene build_sandbox(const ProxyCloud& cloud, const ConsensusParams& consensus, const ClusterParams& cluster,
                           const CameraPose& origin_pose, const CameraIntrinsics& origin_intrinsics,
                           const Vec3& up_axis, SandboxDiagnostics* diagnostics = nullptr);

// Returns the same cloud minus k-NN distance outliers (see ClusterParams).
ProxyCloud remove_knn_outliers(const ProxyCloud& cloud, int k, double std_ratio);

}  // namespace sandbox3d
