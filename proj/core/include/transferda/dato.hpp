#pragma once

#include <Eigen/Dense>

#include "transferda/counters.hpp"
#include "transferda/dynamics.hpp"

namespace tda {

// Kernel transfer-operator model: spectral factorization of the regularized
// Perron-Frobenius pencil plus the adjoint (Koopman) side used for point
// forecasts. Densities live as weight vectors over the m training samples.
struct DatoModel {
    Eigen::MatrixXd X;  // training inputs, m x n (reconstruction anchors)
    double sigma = 1.0;
    double eps = 0.0;
    int S = 0;  // spectral truncation actually kept (cut never splits a pair)
    int q = 1;  // steps between observations

    ObservationModel obs;
    Eigen::MatrixXd R_inv;

    Eigen::VectorXcd lambdas;       // transfer spectrum, descending modulus
    Eigen::VectorXcd lambda_pow_q;  // lambdas^q, cached for the cycle stride
    Eigen::MatrixXcd Phi;           // m x S eigenfunction values (regularized)

    Eigen::VectorXcd lambdas_K;  // Koopman spectrum (same multiset)
    Eigen::MatrixXcd V_K;        // S x m Koopman coefficient rows
    Eigen::MatrixXcd B;          // S x n Koopman modes, X ~ Phi_K B

    Eigen::MatrixXcd normal;  // Phi^H Phi + ridge I, kept for bit-stable solves
    Eigen::LLT<Eigen::MatrixXcd> normal_llt;

    long long m() const { return X.rows(); }
    long long n() const { return X.cols(); }
    void refresh_factor() { normal_llt.compute(normal); }
};

struct DatoState {
    Eigen::VectorXcd xi;   // spectral coefficients
    Eigen::VectorXd rho;   // density weights, >= 0, summing to 1
    int cycle_index = 0;
    double clip_mass = 0.0;  // fraction of |rho| clipped at the last predict
};

struct AnalysisOutput {
    Eigen::VectorXd x_a;    // posterior mean state
    Eigen::VectorXd rho_a;  // posterior density weights
    Eigen::VectorXcd xi_a;  // reprojected spectral coefficients
    Eigen::MatrixXd oi;     // n x p observation influence, empty unless requested
};

DatoModel dato_fit(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double sigma, double eps,
                   int S, int q, const ObservationModel& obs, OpCounters* counters = nullptr);

// uniform density over the training samples with its spectral projection
DatoState dato_init_state(const DatoModel& model, OpCounters* counters = nullptr);

// advance `steps` model steps: xi <- lambda^steps . xi, then resynthesize the
// density (negative parts clipped, mass renormalized). predict stage += m S.
DatoState dato_predict(const DatoModel& model, const DatoState& state, int steps,
                       OpCounters* counters = nullptr);

// Gaussian likelihood of y at every training sample. likelihood stage
// += m (p n + p^2).
Eigen::VectorXd dato_likelihood(const DatoModel& model, const Eigen::VectorXd& y,
                                OpCounters* counters = nullptr);

// Bayes product with the prior weights (computed in log space to dodge
// underflow; identical after normalization), reprojection onto the spectral
// basis, and the posterior-mean reconstruction. project stage += m S + S^2,
// reconstruct stage += m n.
AnalysisOutput dato_analyze(const DatoModel& model, const DatoState& prior,
                            const Eigen::VectorXd& y, OpCounters* counters = nullptr,
                            bool want_oi = false);

// d x_a / d y for the analysis map at fixed prior: Cov_rho(x, Hx) R^{-1}.
Eigen::MatrixXd dato_observation_influence(const DatoModel& model, const Eigen::VectorXd& rho_a);

// Koopman point forecast delta observation intervals ahead of x_a.
// forecast stage += m n + m S + S + S n.
Eigen::VectorXd dato_koopman_forecast(const DatoModel& model, const Eigen::VectorXd& x_a,
                                      int delta, OpCounters* counters = nullptr);

// integer complex power by repeated squaring (deterministic)
std::complex<double> cpow_int(std::complex<double> base, long long exponent);

}  // namespace tda
