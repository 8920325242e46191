#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tmpbsp/geometry.hpp"
#include "tmpbsp/rng.hpp"
#include "tmpbsp/worldmodel.hpp"

namespace tmpbsp {

struct SingularGeometry : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Displacement commanded in the robot's current frame.
struct Control {
    double dx = 0.0;
    double dy = 0.0;
    double dtheta = 0.0;

    double translation_norm() const { return std::hypot(dx, dy); }
};

/// Range-bearing measurement of a landmark or of another robot.
struct Measurement {
    double range = 0.0;
    double bearing = 0.0;  // wrapped to (-pi, pi]
    std::string source;

    Eigen::Vector2d vec() const { return {range, bearing}; }
};

struct NoiseModel {
    Eigen::Matrix3d W = Eigen::Matrix3d::Zero();           // process noise on controls
    Eigen::Matrix2d Q_landmark = Eigen::Matrix2d::Zero();  // landmark measurement noise
    Eigen::Matrix2d Q_mutual = Eigen::Matrix2d::Zero();    // mutual measurement noise
};

/// Gaussian belief over a single robot pose.
struct Belief {
    Pose mean;
    Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
};

/// Gaussian belief over the stacked poses of several robots. Off-diagonal
/// 3x3 blocks stay exactly zero until a mutual observation couples a pair.
struct JointBelief {
    std::vector<Pose> means;
    Eigen::MatrixXd covariance;

    int robots() const { return static_cast<int>(means.size()); }
    Eigen::Block<Eigen::MatrixXd, 3, 3> block(int i, int j) { return covariance.block<3, 3>(3 * i, 3 * j); }
    Eigen::Block<const Eigen::MatrixXd, 3, 3> block(int i, int j) const {
        return covariance.block<3, 3>(3 * i, 3 * j);
    }
};

JointBelief make_joint(const std::vector<Belief>& singles);

// --- Motion model: rigid-body composition of a frame-local displacement ---

Pose motion_mean(const Pose& p, const Control& u);

/// Analytic Jacobians of motion_mean w.r.t. the pose (F) and control (V).
void motion_jacobians(const Pose& p, const Control& u, Eigen::Matrix3d& F, Eigen::Matrix3d& V);

Belief ekf_predict(const Belief& b, const Control& u, const Eigen::Matrix3d& W);

// --- Observation models ---

/// Predicted range-bearing of a landmark and the 2x3 Jacobian w.r.t. the pose.
Measurement landmark_model(const Pose& p, const Landmark& lm, Eigen::Matrix<double, 2, 3>& H);

Belief ekf_update(const Belief& b, const Measurement& z, const Landmark& lm, const Eigen::Matrix2d& Q);

/// Predicted range-bearing of robot r' as seen by r and the 2x6 Jacobian
/// over the stacked pair state [x_r, x_r'].
Measurement mutual_model(const Pose& p_r, const Pose& p_rp, Eigen::Matrix<double, 2, 6>& H);

// --- Joint operations ---

JointBelief joint_predict(const JointBelief& jb, const std::vector<Control>& controls,
                          const std::vector<Eigen::Matrix3d>& W);

JointBelief joint_update_landmark(const JointBelief& jb, int robot_index, const Measurement& z,
                                  const Landmark& lm, const Eigen::Matrix2d& Q);

JointBelief joint_update_mutual(const JointBelief& jb, int r, int rp, const Measurement& z,
                                const Eigen::Matrix2d& Q);

/// Corrupts a nominal measurement with zero-mean Gaussian noise of (diagonal)
/// covariance Q; the bearing stays wrapped.
Measurement simulate_noisy_observation(const Measurement& nominal, const Eigen::Matrix2d& Q,
                                       RandomStream& rng);

/// (S + S^T)/2, applied after every predict/update.
inline void symmetrize(Eigen::MatrixXd& S) { S = 0.5 * (S + S.transpose()).eval(); }
inline void symmetrize(Eigen::Matrix3d& S) { S = 0.5 * (S + S.transpose()).eval(); }

}  // namespace tmpbsp
