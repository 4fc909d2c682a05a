#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "psp/error.hpp"
#include "psp/geometry.hpp"

using namespace psp;
using namespace psp::geometry;

namespace {

using Row11 = std::array<double, 11>;

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected psp::Error";
    return ErrorCode::IoError;
}

CorrespondenceSet forward_project(const Eigen::Matrix<double, 3, 4>& cam, const Eigen::Matrix<double, 3, 4>& proj,
                                  const std::vector<WorldPoint>& pts) {
    CorrespondenceSet out;
    for (const auto& p : pts) {
        const auto c = test::dehomogenize(cam, p);
        const auto q = test::dehomogenize(proj, p);
        out.push_back({p, {c(0), c(1)}, {q(1)}});
    }
    return out;
}

double max_relative(std::span<const double> got, std::span<const double> want) {
    double scale = 0.0;
    for (double w : want) scale = std::max(scale, std::abs(w));
    double worst = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got[i] - want[i]) / scale);
    return worst;
}

ProjectorProjection projector_theta(const Eigen::Matrix<double, 3, 4>& m) {
    return ProjectorProjection::from_matrix(m);
}

}  // namespace

TEST(CameraDesignRows, OriginZeroesProducts) {
    const auto r = camera_design_rows({0, 0, 0}, {5, 7});
    EXPECT_EQ(r.row_x, (Row11{0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0}));
    EXPECT_EQ(r.row_y, (Row11{0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0}));
    EXPECT_EQ(r.target_x, 5.0);
    EXPECT_EQ(r.target_y, 7.0);
}

TEST(CameraDesignRows, UnitX) {
    const auto r = camera_design_rows({1, 0, 0}, {2, 3});
    EXPECT_EQ(r.row_x, (Row11{1, 0, 0, 1, 0, 0, 0, 0, -2, 0, 0}));
    EXPECT_EQ(r.target_x, 2.0);
}

TEST(CameraDesignRows, RowsSatisfyProjectionEquations) {
    const auto r = camera_design_rows({1, 2, 3}, {0.5, -1});
    EXPECT_EQ(r.row_y, (Row11{0, 0, 0, 0, 1, 2, 3, 1, 1, 2, 3}));
    EXPECT_EQ(r.target_y, -1.0);

    // A projection that maps the point exactly onto the pixel makes both rows
    // consistent: row . theta = target.
    std::mt19937_64 rng(11);
    const auto M = test::random_projection(rng, 1000.0);
    const WorldPoint p{13.0, -7.0, 21.0};
    const auto q = test::dehomogenize(M, p);
    const auto rows = camera_design_rows(p, {q(0), q(1)});
    const auto theta = CameraProjection::from_matrix(M).theta;
    double dx = 0.0, dy = 0.0;
    for (int i = 0; i < 11; ++i) {
        dx += rows.row_x[i] * theta[i];
        dy += rows.row_y[i] * theta[i];
    }
    EXPECT_NEAR(dx, q(0), 1e-9);
    EXPECT_NEAR(dy, q(1), 1e-9);
}

TEST(ProjectorDesignRow, Layout) {
    const auto r = projector_design_row({1, 2, 3}, {4});
    EXPECT_EQ(r.row, (std::array<double, 7>{1, 2, 3, 1, -4, -8, -12}));
    EXPECT_EQ(r.target, 4.0);
}

TEST(SolveCamera, RecoversForwardModel) {
    std::mt19937_64 rng(1);
    const auto M = test::random_projection(rng, 1000.0);
    const auto pts = test::random_points(rng, 20, 100.0);
    const auto c = forward_project(M, M, pts);
    const auto sol = solve_camera(c);
    const auto want = CameraProjection::from_matrix(M).theta;
    EXPECT_LT(max_relative(sol.projection.theta, want), 1e-9);
    EXPECT_LT(sol.residual_norm, 1e-10);
}

TEST(SolveCamera, TooFewPoints) {
    std::mt19937_64 rng(2);
    const auto M = test::random_projection(rng, 1000.0);
    const auto c = forward_project(M, M, test::random_points(rng, 5, 100.0));
    EXPECT_EQ(code_of([&] { solve_camera(c); }), ErrorCode::TooFewPoints);
}

TEST(SolveCamera, IdenticalPointsAreRankDeficient) {
    const CorrespondenceSet c(8, Correspondence{{1, 2, 3}, {4, 5}, {6}});
    EXPECT_EQ(code_of([&] { solve_camera(c); }), ErrorCode::RankDeficient);
}

TEST(SolveProjector, RecoversForwardModel) {
    std::mt19937_64 rng(3);
    const auto cam = test::random_projection(rng, 1000.0);
    const auto proj = test::random_projection(rng, 1000.0, -200.0);
    const auto c = forward_project(cam, proj, test::random_points(rng, 20, 100.0));
    const auto sol = solve_projector(c);
    EXPECT_LT(max_relative(sol.projection.theta, projector_theta(proj).theta), 1e-9);
    EXPECT_LT(sol.residual_norm, 1e-10);
}

TEST(SolveProjector, TooFewPoints) {
    std::mt19937_64 rng(4);
    const auto M = test::random_projection(rng, 1000.0);
    const auto c = forward_project(M, M, test::random_points(rng, 6, 100.0));
    EXPECT_EQ(code_of([&] { solve_projector(c); }), ErrorCode::TooFewPoints);
}

TEST(SolveProjector, CoplanarDepthFreeIsRankDeficient) {
    // All points on Z = 0: the Z_w column and the -y_p Z_w column vanish.
    CorrespondenceSet c;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            const double X = 10.0 * i, Y = 7.0 * j + i;
            c.push_back({{X, Y, 0.0}, {X, Y}, {0.5 * Y + 3.0}});
        }
    }
    Eigen::MatrixXd A(c.size(), 7);
    for (std::size_t i = 0; i < c.size(); ++i) {
        const auto r = projector_design_row(c[i].world, c[i].projector);
        for (int k = 0; k < 7; ++k) A(static_cast<Eigen::Index>(i), k) = r.row[k];
    }
    EXPECT_LT(Eigen::FullPivLU<Eigen::MatrixXd>(A).rank(), 7);
    EXPECT_EQ(code_of([&] { solve_projector(c); }), ErrorCode::RankDeficient);
}

TEST(ProjectCamera, IdentityLike) {
    const CameraProjection tc{{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0}};
    const auto q = project_camera(tc, {1, 2, 3});
    EXPECT_DOUBLE_EQ(q.x, 1.0);
    EXPECT_DOUBLE_EQ(q.y, 2.0);
}

TEST(ProjectCamera, Translation) {
    const CameraProjection tc{{1, 0, 0, 10, 0, 1, 0, 0, 0, 0, 0}};
    const auto q = project_camera(tc, {0, 0, 0});
    EXPECT_DOUBLE_EQ(q.x, 10.0);
    EXPECT_DOUBLE_EQ(q.y, 0.0);
}

TEST(ProjectCamera, MatchesMatrixProduct) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const auto M = test::random_projection(rng, 1000.0);
        const auto p = test::random_points(rng, 1, 200.0)[0];
        const auto want = test::dehomogenize(M, p);
        const auto got = project_camera(CameraProjection::from_matrix(M), p);
        EXPECT_NEAR(got.x, want(0), 1e-9 * std::abs(want(0)) + 1e-9);
        EXPECT_NEAR(got.y, want(1), 1e-9 * std::abs(want(1)) + 1e-9);
    }
}

TEST(ProjectCamera, ZeroDepth) {
    const CameraProjection tc{{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, -1}};
    EXPECT_EQ(code_of([&] { project_camera(tc, {0, 0, 1}); }), ErrorCode::DivisionByZeroDepth);
}

TEST(ProjectProjector, Examples) {
    EXPECT_DOUBLE_EQ(project_projector({{0, 0, 1, 0, 0, 0, 0}}, {1, 2, 3}).y, 3.0);
    EXPECT_DOUBLE_EQ(project_projector({{0, 0, 0, 4, 0, 0, 0}}, {-5, 8, 1}).y, 4.0);
    EXPECT_EQ(code_of([&] { project_projector({{0, 0, 0, 4, 0, 0, -1}}, {0, 0, 1}); }),
              ErrorCode::DivisionByZeroDepth);
}

TEST(ProjectProjector, MatchesMatrixProduct) {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 100; ++trial) {
        const auto M = test::random_projection(rng, 1000.0, -200.0);
        const auto p = test::random_points(rng, 1, 200.0)[0];
        EXPECT_NEAR(project_projector(projector_theta(M), p).y, test::dehomogenize(M, p)(1), 1e-9);
    }
}

TEST(Triangulate, IdentitySystem) {
    const CameraProjection tc{{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0}};
    const ProjectorProjection tp{{0, 0, 1, 0, 0, 0, 0}};
    const auto p = triangulate(tc, tp, 1, 2, 3);
    EXPECT_DOUBLE_EQ(p.X, 1.0);
    EXPECT_DOUBLE_EQ(p.Y, 2.0);
    EXPECT_DOUBLE_EQ(p.Z, 3.0);
}

TEST(Triangulate, OriginRoundTrip) {
    std::mt19937_64 rng(7);
    const auto cam = test::random_projection(rng, 1000.0);
    const auto proj = test::random_projection(rng, 1000.0, -200.0);
    const auto tc = CameraProjection::from_matrix(cam);
    const auto tp = projector_theta(proj);
    const auto q = project_camera(tc, {0, 0, 0});
    const auto p = triangulate(tc, tp, q.x, q.y, project_projector(tp, {0, 0, 0}).y);
    EXPECT_NEAR(p.X, 0.0, 1e-9);
    EXPECT_NEAR(p.Y, 0.0, 1e-9);
    EXPECT_NEAR(p.Z, 0.0, 1e-9);
}

TEST(Triangulate, ThirdRowFollowsProjectorEquation) {
    std::mt19937_64 rng(8);
    const auto tc = CameraProjection::from_matrix(test::random_projection(rng, 1000.0));
    const auto tp = projector_theta(test::random_projection(rng, 1000.0, -200.0));
    const double yp = 123.5;
    const auto sys = triangulation_system(tc, tp, 10.0, 20.0, yp);
    const auto& m = tp.theta;
    EXPECT_DOUBLE_EQ(sys.H(2, 0), m[0] - yp * m[4]);
    EXPECT_DOUBLE_EQ(sys.H(2, 1), m[1] - yp * m[5]);
    EXPECT_DOUBLE_EQ(sys.H(2, 2), m[2] - yp * m[6]);
    EXPECT_DOUBLE_EQ(sys.rhs(2), yp - m[3]);
}

TEST(Triangulate, SingularSystem) {
    // Camera and projector rows identical: row 3 duplicates row 2.
    const CameraProjection tc{{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0}};
    const ProjectorProjection tp{{0, 1, 0, 0, 0, 0, 0}};
    EXPECT_EQ(code_of([&] { triangulate(tc, tp, 1, 2, 2); }), ErrorCode::SingularSystem);
}

// ---- properties ---------------------------------------------------------------

TEST(GeometryProperty, RoundTrip) {
    std::mt19937_64 rng(9);
    int checked = 0;
    while (checked < 500) {
        const auto cam = test::random_projection(rng, 1000.0);
        const auto proj = test::random_projection(rng, 1000.0, -200.0);
        const auto tc = CameraProjection::from_matrix(cam);
        const auto tp = projector_theta(proj);
        const auto p = test::random_points(rng, 1, 150.0)[0];
        const auto q = project_camera(tc, p);
        const double yp = project_projector(tp, p).y;
        if (triangulation_condition(tc, tp, q.x, q.y, yp) > 1e6) continue;
        const auto r = triangulate(tc, tp, q.x, q.y, yp);
        ASSERT_NEAR(r.X, p.X, 1e-8);
        ASSERT_NEAR(r.Y, p.Y, 1e-8);
        ASSERT_NEAR(r.Z, p.Z, 1e-8);
        ++checked;
    }
}

TEST(GeometryProperty, LeastSquaresExactness) {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 20; ++trial) {
        const auto cam = test::random_projection(rng, 1000.0);
        const auto proj = test::random_projection(rng, 1000.0, -200.0);
        const auto c = forward_project(cam, proj, test::random_points(rng, 20, 100.0));
        const auto sc = solve_camera(c);
        const auto sp = solve_projector(c);
        EXPECT_LT(sc.residual_norm, 1e-10);
        EXPECT_LT(sp.residual_norm, 1e-10);
        EXPECT_LT(max_relative(sc.projection.theta, CameraProjection::from_matrix(cam).theta), 1e-9);
        EXPECT_LT(max_relative(sp.projection.theta, projector_theta(proj).theta), 1e-9);
    }
}

TEST(GeometryProperty, ResidualGrowsWithPixelNoise) {
    const std::array<double, 4> sigmas{0.0, 0.1, 0.5, 1.0};
    std::array<double, 4> mean_residual{};
    constexpr int kTrials = 60;
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < kTrials; ++trial) {
        const auto cam = test::random_projection(rng, 1000.0);
        const auto proj = test::random_projection(rng, 1000.0, -200.0);
        const auto clean = forward_project(cam, proj, test::random_points(rng, 30, 100.0));
        std::normal_distribution<double> unit(0.0, 1.0);
        std::vector<std::array<double, 3>> draws(clean.size());
        for (auto& d : draws) d = {unit(rng), unit(rng), unit(rng)};
        for (std::size_t s = 0; s < sigmas.size(); ++s) {
            auto noisy = clean;
            for (std::size_t i = 0; i < noisy.size(); ++i) {
                noisy[i].camera.x += sigmas[s] * draws[i][0];
                noisy[i].camera.y += sigmas[s] * draws[i][1];
                noisy[i].projector.y += sigmas[s] * draws[i][2];
            }
            mean_residual[s] += (solve_camera(noisy).residual_norm + solve_projector(noisy).residual_norm) / kTrials;
        }
    }
    for (std::size_t s = 1; s < sigmas.size(); ++s) {
        EXPECT_GE(mean_residual[s], mean_residual[s - 1]) << "sigma " << sigmas[s];
    }
}

TEST(GeometryProperty, ScaleConsistency) {
    // X -> sX with m_ij -> m_ij / s for j = 1..3 keeps every pixel in place.
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> scale(0.1, 10.0);
    for (int trial = 0; trial < 100; ++trial) {
        const auto M = test::random_projection(rng, 1000.0);
        const auto tc = CameraProjection::from_matrix(M);
        const auto tp = projector_theta(M);
        const double s = scale(rng);
        auto tc_s = tc;
        for (int row = 0; row < 3; ++row) {
            for (int col = 0; col < 3; ++col) tc_s.theta[row * 4 + col] /= s;
        }
        auto tp_s = tp;
        for (int i : {0, 1, 2, 4, 5, 6}) tp_s.theta[i] /= s;
        const auto p = test::random_points(rng, 1, 150.0)[0];
        const WorldPoint ps{s * p.X, s * p.Y, s * p.Z};
        const auto a = project_camera(tc, p);
        const auto b = project_camera(tc_s, ps);
        EXPECT_NEAR(a.x, b.x, 1e-9 * std::abs(a.x) + 1e-9);
        EXPECT_NEAR(a.y, b.y, 1e-9 * std::abs(a.y) + 1e-9);
        EXPECT_NEAR(project_projector(tp, p).y, project_projector(tp_s, ps).y, 1e-8);
    }
}
