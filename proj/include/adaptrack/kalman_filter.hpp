#pragma once

#include <adaptrack/geometry.hpp>

#include <Eigen/Core>

namespace adaptrack {

using StateVector = Eigen::Matrix<double, 8, 1>;
using StateCovariance = Eigen::Matrix<double, 8, 8>;
using MeasurementVector = Eigen::Matrix<double, 4, 1>;

/// Constant-velocity state over (cx, cy, aspect, height) and their velocities.
struct KalmanState {
    StateVector mean = StateVector::Zero();
    StateCovariance covariance = StateCovariance::Identity();

    bool finite() const noexcept { return mean.allFinite() && covariance.allFinite(); }
    /// Box described by the position part of the mean.
    BBox box() const noexcept;
};

/// Noise scales are proportional to the box height.
struct KalmanNoise {
    double std_weight_position = 1.0 / 20.0;
    double std_weight_velocity = 1.0 / 160.0;
};

/// (cx, cy, w/h, h) of a box.
MeasurementVector to_measurement(const BBox& b) noexcept;

class KalmanFilter {
public:
    explicit KalmanFilter(KalmanNoise noise = {});

    KalmanState initiate(const BBox& box) const;
    /// One frame ahead; throws std::domain_error on a non-finite state.
    KalmanState predict(const KalmanState& state) const;
    /// Correction against a box measurement; throws std::domain_error if the
    /// innovation covariance cannot be factorized.
    KalmanState update(const KalmanState& state, const BBox& measurement) const;

    const KalmanNoise& noise() const noexcept { return noise_; }

private:
    KalmanNoise noise_;
    StateCovariance motion_;
};

}  // namespace adaptrack
