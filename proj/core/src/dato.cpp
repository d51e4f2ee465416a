#include "transferda/dato.hpp"

#include <cmath>
#include <string>

#include "transferda/errors.hpp"
#include "transferda/kernels.hpp"
#include "transferda/spectral.hpp"

namespace tda {

std::complex<double> cpow_int(std::complex<double> base, long long exponent) {
    if (exponent < 0) throw ConfigError("cpow_int: negative exponent");
    std::complex<double> acc(1.0, 0.0);
    while (exponent > 0) {
        if (exponent & 1) acc *= base;
        base *= base;
        exponent >>= 1;
    }
    return acc;
}

namespace {

Eigen::VectorXcd pow_all(const Eigen::VectorXcd& lambdas, long long exponent) {
    Eigen::VectorXcd out(lambdas.size());
    for (long long j = 0; j < lambdas.size(); ++j) out[j] = cpow_int(lambdas[j], exponent);
    return out;
}

// innovation exponents -0.5 (Hx - y)^T R^{-1} (Hx - y) at every sample
Eigen::VectorXd likelihood_exponents(const DatoModel& model, const Eigen::VectorXd& y,
                                     OpCounters* counters) {
    const long long m = model.m(), n = model.n();
    const long long p = static_cast<long long>(model.obs.selector.size());
    if (y.size() != p) throw ConfigError("dato likelihood: observation has wrong dimension");
    bump(counters, &OpCounters::likelihood,
         static_cast<std::uint64_t>(m) * (static_cast<std::uint64_t>(p) * n + static_cast<std::uint64_t>(p) * p));

    Eigen::VectorXd out(m);
    Eigen::VectorXd z(p);
    for (long long i = 0; i < m; ++i) {
        for (long long k = 0; k < p; ++k) z[k] = model.X(i, model.obs.selector[k]) - y[k];
        out[i] = -0.5 * z.dot(model.R_inv * z);
    }
    return out;
}

}  // namespace

DatoModel dato_fit(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double sigma, double eps,
                   int S, int q, const ObservationModel& obs, OpCounters* counters) {
    const long long m = X.rows(), n = X.cols();
    if (Y.rows() != m || Y.cols() != n) throw ConfigError("dato_fit: X and Y shapes differ");
    if (m < 2) throw ConfigError("dato_fit: need at least two training pairs");
    if (S < 1 || S > m) throw ConfigError("dato_fit: need 1 <= S <= m");
    if (q < 0) throw ConfigError("dato_fit: q must be >= 0");
    if (eps < 0.0) throw ConfigError("dato_fit: eps must be >= 0");
    validate_observation_model(obs, static_cast<int>(n));

    DatoModel model;
    model.X = X;
    model.sigma = sigma;
    model.eps = eps;
    model.q = q;
    model.obs = obs;
    model.R_inv = Eigen::LLT<Eigen::MatrixXd>(obs.R).solve(
        Eigen::MatrixXd::Identity(obs.R.rows(), obs.R.cols()));

    const Eigen::MatrixXd G = rbf_gram(X, X, sigma, counters);
    const Eigen::MatrixXd G_xy = rbf_gram(X, Y, sigma, counters);
    const double shift = static_cast<double>(m) * eps;
    const SpdFactor factor = factor_spd(G, shift, counters);

    EigenPairs pf = dense_transfer_eig(factor, G_xy, S, PencilKind::PerronFrobenius, counters);
    EigenPairs ko = dense_transfer_eig(factor, G_xy.transpose(), S, PencilKind::Koopman, counters);
    if (ko.values.size() != pf.values.size()) {
        // a conjugate pair straddled the cut on one side only; align the sizes
        const int target = static_cast<int>(std::max(pf.values.size(), ko.values.size()));
        if (pf.values.size() < target)
            pf = dense_transfer_eig(factor, G_xy, target, PencilKind::PerronFrobenius, nullptr);
        if (ko.values.size() < target)
            ko = dense_transfer_eig(factor, G_xy.transpose(), target, PencilKind::Koopman, nullptr);
    }
    const long long S_eff = pf.values.size();
    model.S = static_cast<int>(S_eff);
    model.lambdas = pf.values;
    model.lambdas_K = ko.values;
    model.lambda_pow_q = pow_all(pf.values, q);

    // regularized eigenfunction values: G (G + m eps I)^{-1} V = V - m eps U
    bump(counters, &OpCounters::phi,
         static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(S_eff));
    model.Phi = pf.vectors - shift * factor.solve(pf.vectors);

    bump(counters, &OpCounters::phi,
         static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(S_eff));
    const Eigen::MatrixXcd U_K = factor.solve(ko.vectors);
    model.V_K = U_K.transpose();

    // Koopman modes: least squares of the training inputs on the Koopman
    // eigenfunction values
    const Eigen::MatrixXcd Phi_K = ko.vectors - shift * U_K;
    model.B = Phi_K.colPivHouseholderQr().solve(X.cast<std::complex<double>>());
    bump_extra(counters, 2ull * m * S_eff * n);

    model.normal = model.Phi.adjoint() * model.Phi;
    const double ridge = 1e-10 * model.normal.real().trace() / static_cast<double>(S_eff);
    model.normal += ridge * Eigen::MatrixXcd::Identity(S_eff, S_eff);
    model.refresh_factor();
    bump_extra(counters, static_cast<std::uint64_t>(m) * S_eff * S_eff);
    return model;
}

DatoState dato_init_state(const DatoModel& model, OpCounters* counters) {
    const long long m = model.m(), S = model.S;
    DatoState st;
    st.rho = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
    st.xi = model.normal_llt.solve(model.Phi.adjoint() * st.rho.cast<std::complex<double>>());
    st.cycle_index = 0;
    bump_extra(counters, static_cast<std::uint64_t>(m) * S + static_cast<std::uint64_t>(S) * S);
    return st;
}

DatoState dato_predict(const DatoModel& model, const DatoState& state, int steps,
                       OpCounters* counters) {
    if (steps < 0) throw ConfigError("dato_predict: steps must be >= 0");
    const long long m = model.m(), S = model.S;
    if (state.xi.size() != S) throw ConfigError("dato_predict: state has wrong spectral size");

    DatoState out;
    if (steps == model.q)
        out.xi = state.xi.cwiseProduct(model.lambda_pow_q);
    else
        out.xi = state.xi.cwiseProduct(pow_all(model.lambdas, steps));

    bump(counters, &OpCounters::predict, static_cast<std::uint64_t>(m) * S);
    bump_extra(counters, static_cast<std::uint64_t>(S));

    const Eigen::VectorXd raw = (model.Phi * out.xi).real();
    const double total = raw.cwiseAbs().sum();
    const double clipped = raw.cwiseMin(0.0).cwiseAbs().sum();
    Eigen::VectorXd rho = raw.cwiseMax(0.0);
    const double mass = rho.sum();
    if (!(mass > 0.0))
        throw DegenerateUpdateError("dato_predict: predicted density collapsed to zero mass");
    out.rho = rho / mass;
    out.clip_mass = total > 0.0 ? clipped / total : 0.0;
    out.cycle_index = state.cycle_index + 1;
    return out;
}

Eigen::VectorXd dato_likelihood(const DatoModel& model, const Eigen::VectorXd& y,
                                OpCounters* counters) {
    return likelihood_exponents(model, y, counters).array().exp();
}

AnalysisOutput dato_analyze(const DatoModel& model, const DatoState& prior,
                            const Eigen::VectorXd& y, OpCounters* counters, bool want_oi) {
    const long long m = model.m(), n = model.n(), S = model.S;
    if (prior.rho.size() != m) throw ConfigError("dato_analyze: prior has wrong length");

    const Eigen::VectorXd expo = likelihood_exponents(model, y, counters);
    const double shift = expo.maxCoeff();
    const Eigen::VectorXd w = prior.rho.cwiseProduct((expo.array() - shift).exp().matrix());
    bump_extra(counters, static_cast<std::uint64_t>(m));
    const double sw = w.sum();
    if (!(sw > 1e-300))
        throw DegenerateUpdateError(
            "dato_analyze: posterior weights vanished (observation inconsistent with the prior); "
            "consider inflating R");

    AnalysisOutput out;
    out.rho_a = w / sw;
    bump(counters, &OpCounters::project,
         static_cast<std::uint64_t>(m) * S + static_cast<std::uint64_t>(S) * S);
    out.xi_a = model.normal_llt.solve(model.Phi.adjoint() * out.rho_a.cast<std::complex<double>>());
    bump(counters, &OpCounters::reconstruct, static_cast<std::uint64_t>(m) * n);
    out.x_a = model.X.transpose() * out.rho_a;
    if (want_oi) {
        out.oi = dato_observation_influence(model, out.rho_a);
        const auto p = static_cast<std::uint64_t>(model.obs.selector.size());
        bump_extra(counters, static_cast<std::uint64_t>(m) * n * p + static_cast<std::uint64_t>(n) * p * p);
    }
    return out;
}

Eigen::MatrixXd dato_observation_influence(const DatoModel& model, const Eigen::VectorXd& rho_a) {
    const long long m = model.m(), n = model.n();
    const long long p = static_cast<long long>(model.obs.selector.size());
    if (rho_a.size() != m) throw ConfigError("dato_observation_influence: weights have wrong length");

    Eigen::MatrixXd Hx(m, p);
    for (long long k = 0; k < p; ++k) Hx.col(k) = model.X.col(model.obs.selector[k]);
    const Eigen::VectorXd x_mean = model.X.transpose() * rho_a;
    const Eigen::VectorXd h_mean = Hx.transpose() * rho_a;
    const Eigen::MatrixXd cov =
        model.X.transpose() * rho_a.asDiagonal() * Hx - x_mean * h_mean.transpose();
    return cov * model.R_inv;
}

Eigen::VectorXd dato_koopman_forecast(const DatoModel& model, const Eigen::VectorXd& x_a,
                                      int delta, OpCounters* counters) {
    if (delta < 0) throw ConfigError("dato_koopman_forecast: delta must be >= 0");
    const long long m = model.m(), n = model.n(), S = model.S;
    if (x_a.size() != n) throw ConfigError("dato_koopman_forecast: state has wrong dimension");

    bump_kernel_evals(counters, static_cast<std::uint64_t>(m));
    bump(counters, &OpCounters::forecast,
         static_cast<std::uint64_t>(m) * n + static_cast<std::uint64_t>(m) * S +
             static_cast<std::uint64_t>(S) + static_cast<std::uint64_t>(S) * n);

    Eigen::VectorXd kstar(m);
    const double scale = -1.0 / (2.0 * model.sigma * model.sigma);
    for (long long i = 0; i < m; ++i)
        kstar[i] = std::exp(scale * (model.X.row(i).transpose() - x_a).squaredNorm());

    const Eigen::VectorXcd phi_k = model.V_K * kstar.cast<std::complex<double>>();
    const Eigen::VectorXcd psi =
        phi_k.cwiseProduct(pow_all(model.lambdas_K, static_cast<long long>(model.q) * delta));
    return (model.B.transpose() * psi).real();
}

}  // namespace tda
