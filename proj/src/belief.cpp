#include "tmpbsp/belief.hpp"

namespace tmpbsp {

namespace {

constexpr double kMinGeometryDistance = 1e-9;

Eigen::Vector2d innovation(const Measurement& z, const Measurement& predicted) {
    return {z.range - predicted.range, wrap_angle(z.bearing - predicted.bearing)};
}

/// Shared gain computation for all dense updates. H is 2 x n.
void kalman_step(Eigen::VectorXd& mean, Eigen::MatrixXd& cov, const Eigen::MatrixXd& H,
                 const Eigen::Vector2d& nu, const Eigen::Matrix2d& Q) {
    const Eigen::Matrix2d S = H * cov * H.transpose() + Q;
    const Eigen::FullPivLU<Eigen::Matrix2d> lu(S);
    if (!lu.isInvertible()) {
        throw NumericalFailure("innovation covariance is singular");
    }
    const Eigen::MatrixXd K = cov * H.transpose() * lu.inverse();
    mean += K * nu;
    cov = ((Eigen::MatrixXd::Identity(cov.rows(), cov.cols()) - K * H) * cov).eval();
    symmetrize(cov);
}

Eigen::VectorXd stack_means(const std::vector<Pose>& means) {
    Eigen::VectorXd v(3 * means.size());
    for (std::size_t i = 0; i < means.size(); ++i) {
        v[3 * i] = means[i].x;
        v[3 * i + 1] = means[i].y;
        v[3 * i + 2] = means[i].theta;
    }
    return v;
}

void unstack_means(const Eigen::VectorXd& v, std::vector<Pose>& means) {
    for (std::size_t i = 0; i < means.size(); ++i) {
        means[i] = Pose(v[3 * i], v[3 * i + 1], v[3 * i + 2]);
    }
}

}  // namespace

JointBelief make_joint(const std::vector<Belief>& singles) {
    JointBelief jb;
    const int n = static_cast<int>(singles.size());
    jb.covariance = Eigen::MatrixXd::Zero(3 * n, 3 * n);
    for (int i = 0; i < n; ++i) {
        jb.means.push_back(singles[i].mean);
        jb.covariance.block<3, 3>(3 * i, 3 * i) = singles[i].covariance;
    }
    return jb;
}

Pose motion_mean(const Pose& p, const Control& u) {
    const double c = std::cos(p.theta), s = std::sin(p.theta);
    return Pose(p.x + u.dx * c - u.dy * s, p.y + u.dx * s + u.dy * c, p.theta + u.dtheta);
}

void motion_jacobians(const Pose& p, const Control& u, Eigen::Matrix3d& F, Eigen::Matrix3d& V) {
    const double c = std::cos(p.theta), s = std::sin(p.theta);
    F.setIdentity();
    F(0, 2) = -u.dx * s - u.dy * c;
    F(1, 2) = u.dx * c - u.dy * s;
    V << c, -s, 0, s, c, 0, 0, 0, 1;
}

Belief ekf_predict(const Belief& b, const Control& u, const Eigen::Matrix3d& W) {
    Eigen::Matrix3d F, V;
    motion_jacobians(b.mean, u, F, V);
    Belief out;
    out.mean = motion_mean(b.mean, u);
    out.covariance = F * b.covariance * F.transpose() + V * W * V.transpose();
    symmetrize(out.covariance);
    return out;
}

Measurement landmark_model(const Pose& p, const Landmark& lm, Eigen::Matrix<double, 2, 3>& H) {
    const double dx = lm.x - p.x, dy = lm.y - p.y;
    const double d = std::hypot(dx, dy);
    if (d <= kMinGeometryDistance) {
        throw SingularGeometry("robot co-located with landmark " + lm.id);
    }
    Measurement z;
    z.range = d;
    z.bearing = wrap_angle(std::atan2(dy, dx) - p.theta);
    z.source = lm.id;
    const double d2 = d * d;
    H << -dx / d, -dy / d, 0.0, dy / d2, -dx / d2, -1.0;
    return z;
}

Belief ekf_update(const Belief& b, const Measurement& z, const Landmark& lm, const Eigen::Matrix2d& Q) {
    Eigen::Matrix<double, 2, 3> H;
    const Measurement predicted = landmark_model(b.mean, lm, H);
    Eigen::VectorXd mean = stack_means({b.mean});
    Eigen::MatrixXd cov = b.covariance;
    kalman_step(mean, cov, H, innovation(z, predicted), Q);
    Belief out;
    out.mean = Pose(mean[0], mean[1], mean[2]);
    out.covariance = cov;
    return out;
}

Measurement mutual_model(const Pose& p_r, const Pose& p_rp, Eigen::Matrix<double, 2, 6>& H) {
    const double dx = p_rp.x - p_r.x, dy = p_rp.y - p_r.y;
    const double d = std::hypot(dx, dy);
    if (d <= kMinGeometryDistance) {
        throw SingularGeometry("mutually observing robots are coincident");
    }
    Measurement z;
    z.range = d;
    z.bearing = wrap_angle(std::atan2(dy, dx) - p_r.theta);
    z.source = "mutual";
    const double d2 = d * d;
    H << -dx / d, -dy / d, 0.0, dx / d, dy / d, 0.0,
         dy / d2, -dx / d2, -1.0, -dy / d2, dx / d2, 0.0;
    return z;
}

JointBelief joint_predict(const JointBelief& jb, const std::vector<Control>& controls,
                          const std::vector<Eigen::Matrix3d>& W) {
    const int n = jb.robots();
    if (static_cast<int>(controls.size()) != n || static_cast<int>(W.size()) != n) {
        throw std::invalid_argument("joint_predict: one control and noise matrix per robot required");
    }
    JointBelief out = jb;
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(3 * n, 3 * n);
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(3 * n, 3 * n);
    for (int i = 0; i < n; ++i) {
        Eigen::Matrix3d Fi, Vi;
        motion_jacobians(jb.means[i], controls[i], Fi, Vi);
        out.means[i] = motion_mean(jb.means[i], controls[i]);
        F.block<3, 3>(3 * i, 3 * i) = Fi;
        R.block<3, 3>(3 * i, 3 * i) = Vi * W[i] * Vi.transpose();
    }
    out.covariance = F * jb.covariance * F.transpose() + R;
    symmetrize(out.covariance);
    return out;
}

JointBelief joint_update_landmark(const JointBelief& jb, int robot_index, const Measurement& z,
                                  const Landmark& lm, const Eigen::Matrix2d& Q) {
    const int n = jb.robots();
    if (robot_index < 0 || robot_index >= n) {
        throw std::invalid_argument("joint_update_landmark: robot index out of range");
    }
    Eigen::Matrix<double, 2, 3> Hr;
    const Measurement predicted = landmark_model(jb.means[robot_index], lm, Hr);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2, 3 * n);
    H.block<2, 3>(0, 3 * robot_index) = Hr;
    Eigen::VectorXd mean = stack_means(jb.means);
    Eigen::MatrixXd cov = jb.covariance;
    kalman_step(mean, cov, H, innovation(z, predicted), Q);
    JointBelief out = jb;
    unstack_means(mean, out.means);
    out.covariance = cov;
    return out;
}

JointBelief joint_update_mutual(const JointBelief& jb, int r, int rp, const Measurement& z,
                                const Eigen::Matrix2d& Q) {
    const int n = jb.robots();
    if (r == rp || r < 0 || rp < 0 || r >= n || rp >= n) {
        throw std::invalid_argument("joint_update_mutual: invalid robot pair");
    }
    Eigen::Matrix<double, 2, 6> Hpair;
    const Measurement predicted = mutual_model(jb.means[r], jb.means[rp], Hpair);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2, 3 * n);
    H.block<2, 3>(0, 3 * r) = Hpair.block<2, 3>(0, 0);
    H.block<2, 3>(0, 3 * rp) = Hpair.block<2, 3>(0, 3);
    Eigen::VectorXd mean = stack_means(jb.means);
    Eigen::MatrixXd cov = jb.covariance;
    kalman_step(mean, cov, H, innovation(z, predicted), Q);
    JointBelief out = jb;
    unstack_means(mean, out.means);
    out.covariance = cov;
    return out;
}

Measurement simulate_noisy_observation(const Measurement& nominal, const Eigen::Matrix2d& Q,
                                       RandomStream& rng) {
    Measurement z = nominal;
    z.range += rng.gaussian_var(Q(0, 0));
    z.bearing = wrap_angle(z.bearing + rng.gaussian_var(Q(1, 1)));
    return z;
}

}  // namespace tmpbsp
