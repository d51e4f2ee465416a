#include "transferda/dynamics.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <string>

#include "transferda/errors.hpp"

namespace tda {

Eigen::Vector3d l63_rhs(const L63Params& p, const Eigen::Vector3d& x) {
    Eigen::Vector3d dx;
    dx[0] = p.gamma * (x[1] - x[0]);
    dx[1] = x[0] * (p.omega - x[2]) - x[1];
    dx[2] = x[0] * x[1] - p.beta * x[2];
    return dx;
}

Trajectory integrate_l63(const L63Params& p, const Eigen::Vector3d& x0, double dt, long long steps,
                         double t0) {
    if (steps < 1) throw ConfigError("integrate_l63: steps must be >= 1");
    if (!(dt > 0.0)) throw ConfigError("integrate_l63: dt must be positive");

    Trajectory traj;
    traj.dt = dt;
    traj.t0 = t0;
    traj.states.resize(steps + 1, 3);
    traj.states.row(0) = x0;

    const auto rhs = [&p](const Eigen::Vector3d& x) { return l63_rhs(p, x); };
    Eigen::Vector3d x = x0;
    for (long long k = 1; k <= steps; ++k) {
        x = rk4_step(rhs, x, dt);
        if (!x.allFinite())
            throw IntegrationError("integrate_l63: non-finite state at step " + std::to_string(k));
        traj.states.row(k) = x;
    }
    return traj;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> make_training_set(const Trajectory& traj,
                                                              double discard_fraction) {
    if (discard_fraction < 0.0 || discard_fraction >= 1.0)
        throw ConfigError("make_training_set: discard_fraction must lie in [0, 1)");
    const long long pairs = traj.states.rows() - 1;
    if (pairs < 1) throw ConfigError("make_training_set: trajectory has no snapshot pairs");
    const long long m = static_cast<long long>(std::floor((1.0 - discard_fraction) * pairs));
    if (m < 2)
        throw ConfigError("make_training_set: only " + std::to_string(m) +
                          " pairs survive the transient discard");
    const long long start = pairs - m;
    return {traj.states.middleRows(start, m), traj.states.middleRows(start + 1, m)};
}

void validate_observation_model(const ObservationModel& model, int n) {
    const int p = static_cast<int>(model.selector.size());
    if (p < 1) throw ConfigError("observation model: empty selector");
    std::vector<int> sorted = model.selector;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw ConfigError("observation model: duplicate selector index");
    if (sorted.front() < 0 || sorted.back() >= n)
        throw ConfigError("observation model: selector index out of range");
    if (model.R.rows() != p || model.R.cols() != p)
        throw ConfigError("observation model: R must be p x p");
    if (!model.R.isApprox(model.R.transpose(), 1e-12))
        throw ConfigError("observation model: R must be symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(model.R);
    if (llt.info() != Eigen::Success)
        throw ConfigError("observation model: R is not positive definite");
}

Eigen::VectorXd observe_clean(const ObservationModel& model, const Eigen::VectorXd& x) {
    validate_observation_model(model, static_cast<int>(x.size()));
    Eigen::VectorXd y(model.selector.size());
    for (std::size_t i = 0; i < model.selector.size(); ++i) y[i] = x[model.selector[i]];
    return y;
}

Eigen::VectorXd observe(const ObservationModel& model, const Eigen::VectorXd& x, Rng& rng) {
    Eigen::VectorXd y = observe_clean(model, x);
    const int p = static_cast<int>(y.size());
    Eigen::VectorXd z(p);
    for (int i = 0; i < p; ++i) z[i] = rng.normal();
    const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(model.R).matrixL();
    return y + chol * z;
}

Eigen::MatrixXd delay_embed(const Eigen::VectorXd& series, const DelayConfig& cfg) {
    const long long T = series.size();
    const int Q = cfg.Q;
    if (Q < 1) throw ConfigError("delay_embed: Q must be >= 1");
    if (T < Q) throw ConfigError("delay_embed: series shorter than the delay window");
    Eigen::MatrixXd out(T - Q + 1, Q);
    for (long long t = Q - 1; t < T; ++t)
        for (int j = 0; j < Q; ++j) out(t - (Q - 1), j) = series[t - j];
    return out;
}

}  // namespace tda
