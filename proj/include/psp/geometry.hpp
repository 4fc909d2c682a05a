#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace psp::geometry {

struct WorldPoint {
    double X = 0.0;
    double Y = 0.0;
    double Z = 0.0;
};

struct CameraPixel {
    double x = 0.0;
    double y = 0.0;
};

struct ProjectorRow {
    double y = 0.0;
};

// World -> camera projection with m34 fixed to 1.
// theta = [m11 m12 m13 m14 m21 m22 m23 m24 m31 m32 m33].
struct CameraProjection {
    std::array<double, 11> theta{};

    // Full 3x4 matrix including the implied m34 = 1.
    Eigen::Matrix<double, 3, 4> matrix() const;
    static CameraProjection from_matrix(const Eigen::Matrix<double, 3, 4>& m);
};

// World -> projector row mapping with m34 fixed to 1. Row 1 of the projector
// matrix never enters the measurement, so only rows 2 and 3 are kept.
// theta = [m21 m22 m23 m24 m31 m32 m33].
struct ProjectorProjection {
    std::array<double, 7> theta{};

    static ProjectorProjection from_matrix(const Eigen::Matrix<double, 3, 4>& m);
};

struct Correspondence {
    WorldPoint world;
    CameraPixel camera;
    ProjectorRow projector;
};

using CorrespondenceSet = std::vector<Correspondence>;

struct DesignRows {
    std::array<double, 11> row_x{};
    std::array<double, 11> row_y{};
    double target_x = 0.0;
    double target_y = 0.0;
};

struct ProjectorDesignRow {
    std::array<double, 7> row{};
    double target = 0.0;
};

template <typename Projection>
struct Calibrated {
    Projection projection;
    double residual_norm = 0.0;
};

inline constexpr double kDepthEpsilon = 1e-9;
inline constexpr double kRankTolerance = 1e-10;
inline constexpr double kMaxTriangulationCondition = 1e12;

DesignRows camera_design_rows(const WorldPoint& p, const CameraPixel& q);
ProjectorDesignRow projector_design_row(const WorldPoint& p, const ProjectorRow& q);

// Least squares over the stacked design rows (orthogonal factorization).
// Throws TooFewPoints or RankDeficient.
Calibrated<CameraProjection> solve_camera(std::span<const Correspondence> c);
Calibrated<ProjectorProjection> solve_projector(std::span<const Correspondence> c);

CameraPixel project_camera(const CameraProjection& theta, const WorldPoint& p);
ProjectorRow project_projector(const ProjectorProjection& theta, const WorldPoint& p);

// 3x3 system matrix and right-hand side for one (x_c, y_c, y_p) observation.
struct TriangulationSystem {
    Eigen::Matrix3d H;
    Eigen::Vector3d rhs;
};

TriangulationSystem triangulation_system(const CameraProjection& tc, const ProjectorProjection& tp,
                                         double x_c, double y_c, double y_p);

// 2-norm condition number of H; +inf when H is exactly singular.
double triangulation_condition(const CameraProjection& tc, const ProjectorProjection& tp,
                               double x_c, double y_c, double y_p);

// Throws SingularSystem when cond(H) exceeds kMaxTriangulationCondition.
WorldPoint triangulate(const CameraProjection& tc, const ProjectorProjection& tp, double x_c,
                       double y_c, double y_p);

}  // namespace psp::geometry
