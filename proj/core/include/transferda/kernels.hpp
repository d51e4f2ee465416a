#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>

#include "transferda/counters.hpp"

namespace tda {

// kNN-sparsified kernel matrix with symmetric (union) pattern. Each row holds
// its r nearest neighbours plus the diagonal entry; symmetrization may add
// more. Values are symmetric by construction.
struct SparseKernel {
    Eigen::SparseMatrix<double, Eigen::RowMajor> K;
    int r = 0;             // neighbours requested per row (self excluded)
    double epsilon = 1.0;  // bandwidth scale used to build the values
};

// Median of all pairwise distances; exact up to `subsample_cap` points, above
// that a seeded subsample of that size is used. Even counts take the lower
// median. All-coincident points raise a zero-bandwidth error.
double median_bandwidth(const Eigen::MatrixXd& X, int subsample_cap = 2000,
                        std::uint64_t seed = 0x6d656469u);

// (i,j) entry exp(-|a_i - b_j|^2 / (2 sigma^2)). Adds |A|*|B| kernel evals
// and d*|A|*|B| to the gram stage.
Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double sigma,
                         OpCounters* counters = nullptr);

// Per-point bandwidth sigma_i = mean distance to the k_bw nearest neighbours
// (self excluded). Duplicated points give sigma_i = 0 only if all k_bw
// neighbours coincide, which raises an error naming the point.
Eigen::VectorXd vb_bandwidths(const Eigen::MatrixXd& Y, int k_bw = 8);

// exp(-d_ij^2 / (epsilon sigma_i sigma_j)) restricted to the union-symmetric
// kNN pattern. Adds N^2 kernel evals (brute-force neighbour baseline) and
// d*N^2 to the gram stage.
SparseKernel vb_sparse_kernel(const Eigen::MatrixXd& Y, const Eigen::VectorXd& bandwidths, int r,
                              double epsilon, OpCounters* counters = nullptr);

struct SinkhornResult {
    SparseKernel kernel;     // D K D, symmetric, rows summing to 1 within tol
    Eigen::VectorXd d;       // the diagonal scaling
    int iterations = 0;      // sweeps used
    double max_deviation = 0.0;  // final max |row sum - 1|
};

// Symmetric Sinkhorn scaling d <- d / sqrt(d .* (K d)). Adds r*N per sweep to
// the sinkhorn stage. Non-convergence raises an error carrying the worst
// row-sum deviation.
SinkhornResult sinkhorn_normalize(const SparseKernel& kernel, double tol = 1e-8,
                                  int max_iter = 500, OpCounters* counters = nullptr);

}  // namespace tda
