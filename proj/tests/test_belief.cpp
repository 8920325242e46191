#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "tmpbsp/belief.hpp"

using namespace tmpbsp;

namespace {

constexpr double kFdStep = 1e-6;
constexpr double kFdTol = 1e-6;

Eigen::Matrix3d random_spd3(RandomStream& rng) {
    Eigen::Matrix3d A;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) A(i, j) = rng.uniform(-1, 1);
    return A * A.transpose() + 0.01 * Eigen::Matrix3d::Identity();
}

Eigen::MatrixXd random_spd(int n, RandomStream& rng) {
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = rng.uniform(-1, 1);
    return A * A.transpose() + 0.01 * Eigen::MatrixXd::Identity(n, n);
}

/// Independent plain-formula Kalman step used as the dense oracle.
void oracle_kalman(Eigen::VectorXd& mean, Eigen::MatrixXd& cov, const Eigen::MatrixXd& H,
                   const Eigen::Vector2d& nu, const Eigen::Matrix2d& Q) {
    const Eigen::Matrix2d S = H * cov * H.transpose() + Q;
    const Eigen::MatrixXd K = cov * H.transpose() * S.inverse();
    mean = mean + K * nu;
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(cov.rows(), cov.cols());
    cov = (I - K * H) * cov;
    cov = 0.5 * (cov + cov.transpose()).eval();
}

double angdiff(double a, double b) { return wrap_angle(a - b); }

}  // namespace

TEST_CASE("motion model matches the explicit formula") {
    const Pose p(1.0, 2.0, std::numbers::pi / 3);
    const Control u{0.4, -0.1, 0.2};
    const Pose q = motion_mean(p, u);
    const double c = std::cos(p.theta), s = std::sin(p.theta);
    CHECK(q.x == doctest::Approx(p.x + u.dx * c - u.dy * s).epsilon(1e-15));
    CHECK(q.y == doctest::Approx(p.y + u.dx * s + u.dy * c).epsilon(1e-15));
    CHECK(q.theta == doctest::Approx(wrap_angle(p.theta + u.dtheta)));
}

TEST_CASE("motion Jacobians F and V match central finite differences") {
    RandomStream rng(42);
    for (int trial = 0; trial < 1000; ++trial) {
        const Pose p(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-2.9, 2.9));
        const Control u{rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6), rng.uniform(-0.4, 0.4)};
        Eigen::Matrix3d F, V;
        motion_jacobians(p, u, F, V);

        auto eval = [&](const Pose& pp, const Control& uu) {
            const Pose q = motion_mean(pp, uu);
            return Eigen::Vector3d(q.x, q.y, q.theta);
        };
        for (int j = 0; j < 3; ++j) {
            Pose hi = p, lo = p;
            (j == 0 ? hi.x : j == 1 ? hi.y : hi.theta) += kFdStep;
            (j == 0 ? lo.x : j == 1 ? lo.y : lo.theta) -= kFdStep;
            const Eigen::Vector3d a = eval(hi, u), b = eval(lo, u);
            for (int i = 0; i < 3; ++i) {
                const double fd = (i == 2 ? angdiff(a[i], b[i]) : a[i] - b[i]) / (2 * kFdStep);
                CHECK(std::abs(F(i, j) - fd) < kFdTol);
            }
        }
        for (int j = 0; j < 3; ++j) {
            Control hi = u, lo = u;
            (j == 0 ? hi.dx : j == 1 ? hi.dy : hi.dtheta) += kFdStep;
            (j == 0 ? lo.dx : j == 1 ? lo.dy : lo.dtheta) -= kFdStep;
            const Eigen::Vector3d a = eval(p, hi), b = eval(p, lo);
            for (int i = 0; i < 3; ++i) {
                const double fd = (i == 2 ? angdiff(a[i], b[i]) : a[i] - b[i]) / (2 * kFdStep);
                CHECK(std::abs(V(i, j) - fd) < kFdTol);
            }
        }
    }
}

TEST_CASE("landmark measurement Jacobian matches finite differences") {
    RandomStream rng(43);
    for (int trial = 0; trial < 1000; ++trial) {
        const Pose p(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-2.9, 2.9));
        Landmark lm{"lm", rng.uniform(-5, 5), rng.uniform(-5, 5)};
        if (std::hypot(lm.x - p.x, lm.y - p.y) < 0.2) lm.x += 1.0;  // keep non-singular
        Eigen::Matrix<double, 2, 3> H;
        landmark_model(p, lm, H);
        for (int j = 0; j < 3; ++j) {
            Pose hi = p, lo = p;
            (j == 0 ? hi.x : j == 1 ? hi.y : hi.theta) += kFdStep;
            (j == 0 ? lo.x : j == 1 ? lo.y : lo.theta) -= kFdStep;
            Eigen::Matrix<double, 2, 3> dummy;
            const Measurement a = landmark_model(hi, lm, dummy);
            const Measurement b = landmark_model(lo, lm, dummy);
            CHECK(std::abs(H(0, j) - (a.range - b.range) / (2 * kFdStep)) < kFdTol);
            CHECK(std::abs(H(1, j) - angdiff(a.bearing, b.bearing) / (2 * kFdStep)) < kFdTol);
        }
    }
}

TEST_CASE("mutual measurement Jacobian matches finite differences") {
    RandomStream rng(44);
    for (int trial = 0; trial < 1000; ++trial) {
        const Pose pr(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-2.9, 2.9));
        Pose pp(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-2.9, 2.9));
        if (distance_xy(pr, pp) < 0.2) pp.x += 1.0;
        Eigen::Matrix<double, 2, 6> H;
        mutual_model(pr, pp, H);
        for (int j = 0; j < 6; ++j) {
            Pose hr = pr, lr = pr, hp = pp, lp = pp;
            double* hi_f = j < 3 ? (j == 0 ? &hr.x : j == 1 ? &hr.y : &hr.theta)
                                 : (j == 3 ? &hp.x : j == 4 ? &hp.y : &hp.theta);
            double* lo_f = j < 3 ? (j == 0 ? &lr.x : j == 1 ? &lr.y : &lr.theta)
                                 : (j == 3 ? &lp.x : j == 4 ? &lp.y : &lp.theta);
            *hi_f += kFdStep;
            *lo_f -= kFdStep;
            Eigen::Matrix<double, 2, 6> dummy;
            const Measurement a = mutual_model(hr, hp, dummy);
            const Measurement b = mutual_model(lr, lp, dummy);
            CHECK(std::abs(H(0, j) - (a.range - b.range) / (2 * kFdStep)) < kFdTol);
            CHECK(std::abs(H(1, j) - angdiff(a.bearing, b.bearing) / (2 * kFdStep)) < kFdTol);
        }
    }
}

TEST_CASE("mutual Jacobian worked example") {
    // pair at (0,0,0) and (2,0,0): range 2, bearing 0
    Eigen::Matrix<double, 2, 6> H;
    const Measurement z = mutual_model(Pose(0, 0, 0), Pose(2, 0, 0), H);
    CHECK(z.range == doctest::Approx(2.0));
    CHECK(z.bearing == doctest::Approx(0.0));
    Eigen::Matrix<double, 2, 6> expect;
    expect << -1, 0, 0, 1, 0, 0, 0, -0.5, -1, 0, 0.5, 0;
    CHECK((H - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("singular geometry throws") {
    Eigen::Matrix<double, 2, 3> H;
    CHECK_THROWS_AS(landmark_model(Pose(1, 1, 0), Landmark{"lm", 1, 1}, H), SingularGeometry);
    Eigen::Matrix<double, 2, 6> Hm;
    CHECK_THROWS_AS(mutual_model(Pose(1, 1, 0), Pose(1, 1, 1), Hm), SingularGeometry);
}

TEST_CASE("ekf_predict with zero noise keeps a zero covariance") {
    Belief b;
    b.mean = Pose(0, 0, 0.3);
    b.covariance.setZero();
    const Belief out = ekf_predict(b, {0.5, 0, 0.1}, Eigen::Matrix3d::Zero());
    CHECK(out.covariance.cwiseAbs().maxCoeff() == 0.0);
    CHECK(out.mean == motion_mean(b.mean, {0.5, 0, 0.1}));
}

TEST_CASE("single and joint updates match the dense oracle on random steps") {
    RandomStream rng(45);
    const Eigen::Matrix2d Q = Eigen::Vector2d(0.01, 0.002).asDiagonal();
    for (int trial = 0; trial < 200; ++trial) {
        // single-robot update
        Belief b;
        b.mean = Pose(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-2.9, 2.9));
        b.covariance = random_spd3(rng);
        const Landmark lm{"lm", b.mean.x + rng.uniform(0.5, 3), b.mean.y + rng.uniform(0.5, 3)};
        Eigen::Matrix<double, 2, 3> H;
        const Measurement pred = landmark_model(b.mean, lm, H);
        Measurement z = pred;
        z.range += rng.uniform(-0.1, 0.1);
        z.bearing = wrap_angle(z.bearing + rng.uniform(-0.1, 0.1));

        const Belief upd = ekf_update(b, z, lm, Q);
        Eigen::VectorXd mean(3);
        mean << b.mean.x, b.mean.y, b.mean.theta;
        Eigen::MatrixXd cov = b.covariance;
        oracle_kalman(mean, cov, H, {z.range - pred.range, wrap_angle(z.bearing - pred.bearing)}, Q);
        CHECK(std::abs(upd.mean.x - mean[0]) < 1e-9);
        CHECK(std::abs(upd.mean.y - mean[1]) < 1e-9);
        CHECK(std::abs(angdiff(upd.mean.theta, mean[2])) < 1e-9);
        CHECK((upd.covariance - cov).cwiseAbs().maxCoeff() < 1e-9);

        // joint predict against an independently assembled dense model
        JointBelief jb;
        jb.means = {b.mean, Pose(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-2.9, 2.9))};
        jb.covariance = random_spd(6, rng);
        const std::vector<Control> us = {
            {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.3, 0.3)},
            {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.3, 0.3)}};
        const Eigen::Matrix3d W = Eigen::Vector3d(0.001, 0.001, 0.0005).asDiagonal();
        const JointBelief jp = joint_predict(jb, us, {W, W});

        Eigen::MatrixXd Fd = Eigen::MatrixXd::Zero(6, 6), Rd = Eigen::MatrixXd::Zero(6, 6);
        for (int i = 0; i < 2; ++i) {
            Eigen::Matrix3d Fi, Vi;
            motion_jacobians(jb.means[i], us[i], Fi, Vi);
            Fd.block<3, 3>(3 * i, 3 * i) = Fi;
            Rd.block<3, 3>(3 * i, 3 * i) = Vi * W * Vi.transpose();
        }
        Eigen::MatrixXd cov_o = Fd * jb.covariance * Fd.transpose() + Rd;
        cov_o = 0.5 * (cov_o + cov_o.transpose()).eval();
        CHECK((jp.covariance - cov_o).cwiseAbs().maxCoeff() < 1e-9);
        for (int i = 0; i < 2; ++i) {
            CHECK(jp.means[i] == motion_mean(jb.means[i], us[i]));
        }

        // joint landmark update
        const int ri = trial % 2;
        Eigen::Matrix<double, 2, 3> Hl;
        Landmark lm2{"lm2", jb.means[ri].x + 1.5, jb.means[ri].y + 0.5};
        const Measurement predl = landmark_model(jb.means[ri], lm2, Hl);
        Measurement zl = predl;
        zl.range += rng.uniform(-0.1, 0.1);
        const JointBelief ju = joint_update_landmark(jb, ri, zl, lm2, Q);
        Eigen::MatrixXd Hd = Eigen::MatrixXd::Zero(2, 6);
        Hd.block<2, 3>(0, 3 * ri) = Hl;
        Eigen::VectorXd jmean(6);
        for (int i = 0; i < 2; ++i)
            jmean.segment<3>(3 * i) << jb.means[i].x, jb.means[i].y, jb.means[i].theta;
        Eigen::MatrixXd jcov = jb.covariance;
        oracle_kalman(jmean, jcov, Hd,
                      {zl.range - predl.range, wrap_angle(zl.bearing - predl.bearing)}, Q);
        CHECK((ju.covariance - jcov).cwiseAbs().maxCoeff() < 1e-9);
        for (int i = 0; i < 2; ++i) {
            CHECK(std::abs(ju.means[i].x - jmean[3 * i]) < 1e-9);
            CHECK(std::abs(ju.means[i].y - jmean[3 * i + 1]) < 1e-9);
            CHECK(std::abs(angdiff(ju.means[i].theta, jmean[3 * i + 2])) < 1e-9);
        }

        // joint mutual update
        Eigen::Matrix<double, 2, 6> Hm;
        const Measurement predm = mutual_model(jb.means[0], jb.means[1], Hm);
        Measurement zm = predm;
        zm.bearing = wrap_angle(zm.bearing + rng.uniform(-0.05, 0.05));
        const JointBelief jm = joint_update_mutual(jb, 0, 1, zm, Q);
        Eigen::VectorXd mmean(6);
        for (int i = 0; i < 2; ++i)
            mmean.segment<3>(3 * i) << jb.means[i].x, jb.means[i].y, jb.means[i].theta;
        Eigen::MatrixXd mcov = jb.covariance;
        oracle_kalman(mmean, mcov, Hm,
                      {zm.range - predm.range, wrap_angle(zm.bearing - predm.bearing)}, Q);
        CHECK((jm.covariance - mcov).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("update contracts the covariance trace") {
    RandomStream rng(46);
    for (int trial = 0; trial < 500; ++trial) {
        Belief b;
        b.mean = Pose(0, 0, 0.2);
        b.covariance = random_spd3(rng);
        const Landmark lm{"lm", 2, 1};
        Eigen::Matrix<double, 2, 3> H;
        Measurement z = landmark_model(b.mean, lm, H);
        z.range += rng.uniform(-0.2, 0.2);
        const Eigen::Matrix2d Q = Eigen::Vector2d(0.01, 0.004).asDiagonal();
        const Belief out = ekf_update(b, z, lm, Q);
        CHECK(out.covariance.trace() <= b.covariance.trace() + 1e-12);
        // posterior stays symmetric PSD
        CHECK((out.covariance - out.covariance.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(out.covariance);
        CHECK(es.eigenvalues().minCoeff() > -1e-10);
    }
}

TEST_CASE("bearing innovation is wrapped across the pi boundary") {
    Belief b;
    b.mean = Pose(0, 0, 0);
    b.covariance = Eigen::Vector3d(0.01, 0.01, 0.01).asDiagonal();
    const Landmark lm{"lm", -3, 0.01};  // bearing just below +pi
    Eigen::Matrix<double, 2, 3> H;
    const Measurement pred = landmark_model(b.mean, lm, H);
    CHECK(pred.bearing > 3.13);
    Measurement z = pred;
    z.bearing = wrap_angle(pred.bearing + 0.02);  // crosses to just above -pi
    CHECK(z.bearing < -3.12);
    const Belief out = ekf_update(b, z, lm, Eigen::Matrix2d::Identity() * 0.01);
    // A wrapped innovation is tiny; an unwrapped one (~ -2*pi) would yank
    // the mean by metres.
    CHECK(std::hypot(out.mean.x - b.mean.x, out.mean.y - b.mean.y) < 0.05);
}

TEST_CASE("simulate_noisy_observation is unbiased and respects zero variance") {
    RandomStream rng(47);
    Measurement nominal;
    nominal.range = 2.0;
    nominal.bearing = 0.5;
    const Measurement exact = simulate_noisy_observation(nominal, Eigen::Matrix2d::Zero(), rng);
    CHECK(exact.range == 2.0);
    CHECK(exact.bearing == 0.5);

    const Eigen::Matrix2d Q = Eigen::Vector2d(0.04, 0.01).asDiagonal();
    double sum_r = 0, sum_b = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const Measurement z = simulate_noisy_observation(nominal, Q, rng);
        sum_r += z.range;
        sum_b += z.bearing;
    }
    CHECK(std::abs(sum_r / n - 2.0) < 4 * 0.2 / std::sqrt(n));
    CHECK(std::abs(sum_b / n - 0.5) < 4 * 0.1 / std::sqrt(n));
}

TEST_CASE("repeated landmark updates concentrate the belief (law of large numbers)") {
    RandomStream rng(48);
    const Pose truth(1.0, 1.0, 0.5);
    Belief b;
    b.mean = Pose(1.4, 0.7, 0.4);  // biased prior
    b.covariance = Eigen::Vector3d(0.25, 0.25, 0.05).asDiagonal();
    const std::vector<Landmark> lms = {{"a", 4, 1}, {"b", 1, 4}};
    const Eigen::Matrix2d Q = Eigen::Vector2d(0.01, 0.002).asDiagonal();
    for (int i = 0; i < 400; ++i) {
        for (const auto& lm : lms) {
            Eigen::Matrix<double, 2, 3> H;
            const Measurement z =
                simulate_noisy_observation(landmark_model(truth, lm, H), Q, rng);
            b = ekf_update(b, z, lm, Q);
        }
    }
    CHECK(std::hypot(b.mean.x - truth.x, b.mean.y - truth.y) < 0.03);
    CHECK(b.covariance.trace() < 1e-3);
}

TEST_CASE("make_joint builds an exact block-diagonal") {
    Belief a, b;
    a.mean = Pose(0, 0, 0);
    a.covariance = Eigen::Vector3d(1, 2, 3).asDiagonal();
    b.mean = Pose(5, 5, 1);
    b.covariance = Eigen::Vector3d(4, 5, 6).asDiagonal();
    const JointBelief jb = make_joint({a, b});
    CHECK(jb.robots() == 2);
    CHECK(jb.covariance.rows() == 6);
    CHECK((jb.block(0, 0) - a.covariance).cwiseAbs().maxCoeff() == 0.0);
    CHECK((jb.block(1, 1) - b.covariance).cwiseAbs().maxCoeff() == 0.0);
    CHECK(jb.block(0, 1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cross blocks stay structurally zero without mutual updates") {
    RandomStream rng(49);
    JointBelief jb;
    jb.means = {Pose(0, 0, 0), Pose(4, 0, 0)};
    jb.covariance = Eigen::MatrixXd::Zero(6, 6);
    jb.covariance.diagonal() << 0.01, 0.01, 0.002, 0.01, 0.01, 0.002;
    const Eigen::Matrix3d W = Eigen::Vector3d(1e-4, 1e-4, 1e-4).asDiagonal();
    const Eigen::Matrix2d Q = Eigen::Vector2d(0.01, 0.002).asDiagonal();
    const Landmark lm{"lm", 2, 1};
    for (int t = 0; t < 50; ++t) {
        jb = joint_predict(jb, {{0.2, 0, 0.05}, {0.1, 0.05, -0.02}}, {W, W});
        Eigen::Matrix<double, 2, 3> H;
        Measurement z = simulate_noisy_observation(landmark_model(jb.means[t % 2], lm, H), Q, rng);
        jb = joint_update_landmark(jb, t % 2, z, lm, Q);
        CHECK(jb.block(0, 1).cwiseAbs().maxCoeff() < 1e-300);
        CHECK(jb.block(1, 0).cwiseAbs().maxCoeff() < 1e-300);
    }
    // first mutual update couples the pair
    Eigen::Matrix<double, 2, 6> Hm;
    const Measurement zm = mutual_model(jb.means[0], jb.means[1], Hm);
    jb = joint_update_mutual(jb, 0, 1, zm, Q);
    CHECK(jb.block(0, 1).norm() > 1e-8);
}

TEST_CASE("gaussian_var(0) is exactly zero") {
    RandomStream rng(50);
    for (int i = 0; i < 100; ++i) CHECK(rng.gaussian_var(0.0) == 0.0);
}
