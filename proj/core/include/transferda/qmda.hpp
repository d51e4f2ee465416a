#pragma once

#include <Eigen/Dense>
#include <vector>

#include "transferda/counters.hpp"

namespace tda {

// Equal-measure partition of a scalar observable. Interior edges are
// midpoints between the sorted samples flanking each quantile rank boundary;
// membership is by rank, so bins hold N/S +- 1 samples even with ties.
struct Partition {
    int S = 0;
    Eigen::VectorXd edges;          // S+1 ascending, edges[0]/edges[S] = data range
    Eigen::VectorXd cell_averages;  // mean observable value per bin
    std::vector<int> membership;    // bin of each training sample
};

Partition build_partition(const Eigen::VectorXd& values, int S);

// Half-open assignment: number of interior edges <= y, clamped to [0, S-1].
int assign_bin(const Partition& partition, double y);

// U^(q)_{jk} = (1/N) sum_n phi_j(n) phi_k(n+q) on an empirical-norm basis.
// koopman_build stage += N L^2.
Eigen::MatrixXd build_koopman(const Eigen::MatrixXd& basis, int q, OpCounters* counters = nullptr);

// E_i = (1/N) Phi_i^T Phi_i over the samples of bin i; sums to the identity.
// projector_build stage += N L^2 in total.
std::vector<Eigen::MatrixXd> build_projectors(const Eigen::MatrixXd& basis,
                                              const Partition& partition,
                                              OpCounters* counters = nullptr);

struct QmdaParams {
    int L = 0;          // basis size
    int r = 0;          // kNN sparsity
    int S = 0;          // partition cells
    int q = 1;          // shift between assimilations
    int k_bw = 8;       // neighbours for the bandwidth field
    double epsilon = 1.0;
    double sinkhorn_tol = 1e-8;
    int sinkhorn_max_iter = 500;
    bool multi_horizon = false;  // additionally build U^(0..q)
};

struct QmdaModel {
    Eigen::MatrixXd basis;  // N x L, (1/N) basis^T basis = I
    Eigen::VectorXd basis_eigenvalues;
    Eigen::MatrixXd U_q;                  // shift-q Koopman matrix
    std::vector<Eigen::MatrixXd> U_multi; // U^(0..q) when multi_horizon
    std::vector<Eigen::MatrixXd> projectors;
    Partition partition;
    Eigen::VectorXd bandwidths;
    int q = 1;
    int r = 0;
    int k_bw = 8;
    double epsilon = 1.0;
    int sinkhorn_iterations = 0;
    bool multi_horizon = false;

    long long N() const { return basis.rows(); }
    int L() const { return static_cast<int>(basis.cols()); }
};

// kernel -> Sinkhorn -> eigenbasis -> partition -> Koopman + projectors
QmdaModel qmda_fit(const Eigen::MatrixXd& data, const Eigen::VectorXd& h_values,
                   const QmdaParams& params, OpCounters* counters = nullptr);

using DensityOperator = Eigen::MatrixXd;  // L x L, symmetric, PSD, unit trace

DensityOperator qmda_init_state(int L);  // maximally mixed I/L

// rho <- U^T rho U / trace. evolve stage += 2 L^3.
DensityOperator qmda_evolve(const QmdaModel& model, const DensityOperator& rho,
                            OpCounters* counters = nullptr);

// P_i = tr(E_i rho); tiny negatives (> -1e-10) clipped, then renormalized.
// measure stage += S L^2.
Eigen::VectorXd qmda_probabilities(const QmdaModel& model, const DensityOperator& rho,
                                   OpCounters* counters = nullptr);

// projective conditioning rho <- E_b rho E_b / trace. update stage += 2 L^3.
DensityOperator qmda_update(const QmdaModel& model, const DensityOperator& rho, int bin,
                            OpCounters* counters = nullptr);

}  // namespace tda
