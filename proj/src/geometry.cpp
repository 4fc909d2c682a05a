#include "psp/geometry.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/SVD>

#include "psp/error.hpp"

namespace psp::geometry {

namespace {

bool finite(const WorldPoint& p) {
    return std::isfinite(p.X) && std::isfinite(p.Y) && std::isfinite(p.Z);
}

// Solves min |A x - b| with column equilibration followed by an SVD. The
// scaling only rescales the unknowns, so the minimizer is unchanged.
Eigen::VectorXd least_squares(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                              double& residual_norm) {
    Eigen::VectorXd scale = A.colwise().norm().transpose();
    for (Eigen::Index j = 0; j < scale.size(); ++j) {
        if (scale[j] == 0.0) scale[j] = 1.0;
    }
    const Eigen::MatrixXd scaled = A * scale.cwiseInverse().asDiagonal();

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double largest = sv[0];
    const double smallest = sv[sv.size() - 1];
    if (!(largest > 0.0) || smallest < kRankTolerance * largest) {
        throw Error(ErrorCode::RankDeficient,
                    "design matrix singular value ratio " + std::to_string(smallest / largest) +
                        " below tolerance");
    }

    const Eigen::VectorXd y = svd.solve(b);
    const Eigen::VectorXd x = y.cwiseQuotient(scale);
    residual_norm = (A * x - b).norm();
    return x;
}

double checked_depth(double depth) {
    if (!std::isfinite(depth) || std::abs(depth) < kDepthEpsilon) {
        throw Error(ErrorCode::DivisionByZeroDepth,
                    "projective depth " + std::to_string(depth) + " too close to zero");
    }
    return depth;
}

}  // namespace

Eigen::Matrix<double, 3, 4> CameraProjection::matrix() const {
    Eigen::Matrix<double, 3, 4> m;
    m << theta[0], theta[1], theta[2], theta[3],  //
        theta[4], theta[5], theta[6], theta[7],   //
        theta[8], theta[9], theta[10], 1.0;
    return m;
}

CameraProjection CameraProjection::from_matrix(const Eigen::Matrix<double, 3, 4>& m) {
    const double s = m(2, 3);
    if (s == 0.0) {
        throw Error(ErrorCode::InvalidArgument, "projection matrix has m34 = 0");
    }
    const Eigen::Matrix<double, 3, 4> n = m / s;
    return CameraProjection{{n(0, 0), n(0, 1), n(0, 2), n(0, 3), n(1, 0), n(1, 1), n(1, 2),
                             n(1, 3), n(2, 0), n(2, 1), n(2, 2)}};
}

ProjectorProjection ProjectorProjection::from_matrix(const Eigen::Matrix<double, 3, 4>& m) {
    const double s = m(2, 3);
    if (s == 0.0) {
        throw Error(ErrorCode::InvalidArgument, "projection matrix has m34 = 0");
    }
    const Eigen::Matrix<double, 3, 4> n = m / s;
    return ProjectorProjection{{n(1, 0), n(1, 1), n(1, 2), n(1, 3), n(2, 0), n(2, 1), n(2, 2)}};
}

DesignRows camera_design_rows(const WorldPoint& p, const CameraPixel& q) {
    const auto [X, Y, Z] = p;
    DesignRows r;
    r.row_x = {X, Y, Z, 1.0, 0.0, 0.0, 0.0, 0.0, -q.x * X, -q.x * Y, -q.x * Z};
    r.row_y = {0.0, 0.0, 0.0, 0.0, X, Y, Z, 1.0, -q.y * X, -q.y * Y, -q.y * Z};
    r.target_x = q.x;
    r.target_y = q.y;
    return r;
}

ProjectorDesignRow projector_design_row(const WorldPoint& p, const ProjectorRow& q) {
    const auto [X, Y, Z] = p;
    return {{X, Y, Z, 1.0, -q.y * X, -q.y * Y, -q.y * Z}, q.y};
}

Calibrated<CameraProjection> solve_camera(std::span<const Correspondence> c) {
    if (c.size() < 6) {
        throw Error(ErrorCode::TooFewPoints, "camera calibration needs at least 6 correspondences, got " +
                                                 std::to_string(c.size()));
    }
    const auto n = static_cast<Eigen::Index>(c.size());
    Eigen::MatrixXd A(2 * n, 11);
    Eigen::VectorXd b(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& rec = c[static_cast<std::size_t>(i)];
        if (!finite(rec.world) || !std::isfinite(rec.camera.x) || !std::isfinite(rec.camera.y)) {
            throw Error(ErrorCode::InvalidArgument, "non-finite correspondence");
        }
        const DesignRows rows = camera_design_rows(rec.world, rec.camera);
        A.row(2 * i) = Eigen::Map<const Eigen::RowVectorXd>(rows.row_x.data(), 11);
        A.row(2 * i + 1) = Eigen::Map<const Eigen::RowVectorXd>(rows.row_y.data(), 11);
        b[2 * i] = rows.target_x;
        b[2 * i + 1] = rows.target_y;
    }
    Calibrated<CameraProjection> out;
    const Eigen::VectorXd x = least_squares(A, b, out.residual_norm);
    for (int k = 0; k < 11; ++k) out.projection.theta[static_cast<std::size_t>(k)] = x[k];
    return out;
}

Calibrated<ProjectorProjection> solve_projector(std::span<const Correspondence> c) {
    if (c.size() < 7) {
        throw Error(ErrorCode::TooFewPoints, "projector calibration needs at least 7 correspondences, got " +
                                                 std::to_string(c.size()));
    }
    const auto n = static_cast<Eigen::Index>(c.size());
    Eigen::MatrixXd A(n, 7);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& rec = c[static_cast<std::size_t>(i)];
        if (!finite(rec.world) || !std::isfinite(rec.projector.y)) {
            throw Error(ErrorCode::InvalidArgument, "non-finite correspondence");
        }
        const ProjectorDesignRow row = projector_design_row(rec.world, rec.projector);
        A.row(i) = Eigen::Map<const Eigen::RowVectorXd>(row.row.data(), 7);
        b[i] = row.target;
    }
    Calibrated<ProjectorProjection> out;
    const Eigen::VectorXd x = least_squares(A, b, out.residual_norm);
    for (int k = 0; k < 7; ++k) out.projection.theta[static_cast<std::size_t>(k)] = x[k];
    return out;
}

CameraPixel project_camera(const CameraProjection& theta, const WorldPoint& p) {
    const auto& m = theta.theta;
    const double depth = checked_depth(m[8] * p.X + m[9] * p.Y + m[10] * p.Z + 1.0);
    return {(m[0] * p.X + m[1] * p.Y + m[2] * p.Z + m[3]) / depth,
            (m[4] * p.X + m[5] * p.Y + m[6] * p.Z + m[7]) / depth};
}

ProjectorRow project_projector(const ProjectorProjection& theta, const WorldPoint& p) {
    const auto& m = theta.theta;
    const double depth = checked_depth(m[4] * p.X + m[5] * p.Y + m[6] * p.Z + 1.0);
    return {(m[0] * p.X + m[1] * p.Y + m[2] * p.Z + m[3]) / depth};
}

TriangulationSystem triangulation_system(const CameraProjection& tc, const ProjectorProjection& tp,
                                         double x_c, double y_c, double y_p) {
    const auto& c = tc.theta;
    const auto& p = tp.theta;
    TriangulationSystem s;
    s.H << c[0] - x_c * c[8], c[1] - x_c * c[9], c[2] - x_c * c[10],  //
        c[4] - y_c * c[8], c[5] - y_c * c[9], c[6] - y_c * c[10],     //
        p[0] - y_p * p[4], p[1] - y_p * p[5], p[2] - y_p * p[6];
    s.rhs << x_c - c[3], y_c - c[7], y_p - p[3];
    return s;
}

double triangulation_condition(const CameraProjection& tc, const ProjectorProjection& tp,
                               double x_c, double y_c, double y_p) {
    const auto s = triangulation_system(tc, tp, x_c, y_c, y_p);
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(s.H);
    const auto& sv = svd.singularValues();
    if (sv[2] == 0.0) return std::numeric_limits<double>::infinity();
    return sv[0] / sv[2];
}

WorldPoint triangulate(const CameraProjection& tc, const ProjectorProjection& tp, double x_c,
                       double y_c, double y_p) {
    const auto s = triangulation_system(tc, tp, x_c, y_c, y_p);
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(s.H, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (!(sv[2] > 0.0) || sv[0] / sv[2] > kMaxTriangulationCondition) {
        throw Error(ErrorCode::SingularSystem,
                    "triangulation matrix condition number exceeds 1e12 at (" + std::to_string(x_c) +
                        ", " + std::to_string(y_c) + ", " + std::to_string(y_p) + ")");
    }
    const Eigen::Vector3d w = svd.solve(s.rhs);
    return {w[0], w[1], w[2]};
}

}  // namespace psp::geometry
