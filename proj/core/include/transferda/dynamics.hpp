#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "transferda/rng.hpp"

namespace tda {

struct L63Params {
    double gamma = 10.0;      // convection coupling
    double omega = 28.0;      // forcing
    double beta = 8.0 / 3.0;  // damping
};

// Rows are snapshots: states.row(k) is the state after k integrator steps,
// at time t0 + k*dt.
struct Trajectory {
    Eigen::MatrixXd states;
    double dt = 0.0;
    double t0 = 0.0;
};

// Linear-Gaussian observation of selected state components.
struct ObservationModel {
    std::vector<int> selector;  // observed component indices, distinct
    Eigen::MatrixXd R;          // p x p noise covariance, SPD
    std::uint64_t noise_seed = 0;
};

struct DelayConfig {
    int Q = 1;        // window length (number of lags + 1)
    double dt = 0.0;  // sampling interval, metadata only
};

Eigen::Vector3d l63_rhs(const L63Params& p, const Eigen::Vector3d& x);

// classic fixed-step RK4 update, shared with tests that integrate other ODEs
template <class F, class Vec>
Vec rk4_step(const F& rhs, const Vec& x, double dt) {
    const Vec k1 = rhs(x);
    const Vec k2 = rhs(x + (0.5 * dt) * k1);
    const Vec k3 = rhs(x + (0.5 * dt) * k2);
    const Vec k4 = rhs(x + dt * k3);
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// `steps` RK4 updates -> steps+1 snapshots, states.row(0) = x0.
Trajectory integrate_l63(const L63Params& p, const Eigen::Vector3d& x0, double dt, long long steps,
                         double t0 = 0.0);

// Drop the leading `discard_fraction` of the snapshot pairs (transient) and
// return the last m = floor((1-discard)*pairs) consecutive pairs as (X, Y)
// with Y.row(i) the one-step image of X.row(i).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> make_training_set(const Trajectory& traj,
                                                              double discard_fraction);

void validate_observation_model(const ObservationModel& model, int n);

// y = x[selector] + chol(R) z, z ~ N(0, I); draws consume `rng` in
// observation order.
Eigen::VectorXd observe(const ObservationModel& model, const Eigen::VectorXd& x, Rng& rng);

// noiseless variant: pure coordinate projection
Eigen::VectorXd observe_clean(const ObservationModel& model, const Eigen::VectorXd& x);

// Row t-(Q-1) of the result is (h_t, h_{t-1}, ..., h_{t-Q+1}): newest entry
// first, (T-Q+1) x Q overall.
Eigen::MatrixXd delay_embed(const Eigen::VectorXd& series, const DelayConfig& cfg);

}  // namespace tda
