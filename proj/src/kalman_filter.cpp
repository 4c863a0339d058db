#include <adaptrack/kalman_filter.hpp>

#include <Eigen/Cholesky>

#include <stdexcept>

namespace adaptrack {
namespace {

void symmetrize(StateCovariance& p) {
    p = 0.5 * (p + p.transpose()).eval();
}

}  // namespace

BBox KalmanState::box() const noexcept {
    const double h = mean(3);
    const double w = mean(2) * h;
    return {mean(0) - 0.5 * w, mean(1) - 0.5 * h, w, h};
}

MeasurementVector to_measurement(const BBox& b) noexcept {
    return {b.center_x(), b.center_y(), b.w / b.h, b.h};
}

KalmanFilter::KalmanFilter(KalmanNoise noise) : noise_(noise), motion_(StateCovariance::Identity()) {
    for (int i = 0; i < 4; ++i) {
        motion_(i, i + 4) = 1.0;
    }
}

KalmanState KalmanFilter::initiate(const BBox& box) const {
    KalmanState s;
    s.mean.head<4>() = to_measurement(box);
    s.mean.tail<4>().setZero();

    const double h = box.h;
    const double wp = noise_.std_weight_position;
    const double wv = noise_.std_weight_velocity;
    StateVector std_dev;
    std_dev << 2 * wp * h, 2 * wp * h, 1e-2, 2 * wp * h, 10 * wv * h, 10 * wv * h, 1e-5, 10 * wv * h;
    s.covariance = std_dev.array().square().matrix().asDiagonal();
    return s;
}

KalmanState KalmanFilter::predict(const KalmanState& state) const {
    if (!state.finite()) {
        throw std::domain_error("kalman predict: non-finite state");
    }
    const double h = state.mean(3);
    const double wp = noise_.std_weight_position;
    const double wv = noise_.std_weight_velocity;
    StateVector std_dev;
    std_dev << wp * h, wp * h, 1e-2, wp * h, wv * h, wv * h, 1e-5, wv * h;
    const StateCovariance process = std_dev.array().square().matrix().asDiagonal();

    KalmanState out;
    out.mean = motion_ * state.mean;
    out.covariance = motion_ * state.covariance * motion_.transpose() + process;
    symmetrize(out.covariance);
    return out;
}

KalmanState KalmanFilter::update(const KalmanState& state, const BBox& measurement) const {
    if (!state.finite() || !measurement.finite()) {
        throw std::domain_error("kalman update: non-finite input");
    }
    const double h = state.mean(3);
    const double wp = noise_.std_weight_position;
    Eigen::Vector4d std_dev(wp * h, wp * h, 1e-1, wp * h);
    const Eigen::Matrix4d noise = std_dev.array().square().matrix().asDiagonal();

    // H selects the first four state components.
    const Eigen::Matrix<double, 4, 8> projected_cov_rows = state.covariance.topRows<4>();
    const Eigen::Matrix4d innovation_cov = state.covariance.topLeftCorner<4, 4>() + noise;
    const Eigen::LLT<Eigen::Matrix4d> chol(innovation_cov);
    if (chol.info() != Eigen::Success) {
        throw std::domain_error("kalman update: singular innovation covariance");
    }
    // K = P H^T S^-1, computed as (S^-1 H P)^T.
    const Eigen::Matrix<double, 8, 4> gain = chol.solve(projected_cov_rows).transpose();
    const MeasurementVector innovation = to_measurement(measurement) - state.mean.head<4>();

    KalmanState out;
    out.mean = state.mean + gain * innovation;
    out.covariance = state.covariance - gain * innovation_cov * gain.transpose();
    symmetrize(out.covariance);
    return out;
}

}  // namespace adaptrack
