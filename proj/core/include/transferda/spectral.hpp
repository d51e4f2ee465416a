#pragma once

#include <Eigen/Dense>

#include "transferda/counters.hpp"
#include "transferda/kernels.hpp"

namespace tda {

// Cholesky factor of G + shift*I, kept as an explicit lower triangle so the
// factor can be persisted and solves stay deterministic.
struct SpdFactor {
    Eigen::MatrixXd L;  // lower triangular
    double shift = 0.0;
    long long m = 0;

    Eigen::MatrixXd solve(const Eigen::MatrixXd& B) const;
    Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
    Eigen::MatrixXcd solve(const Eigen::MatrixXcd& B) const;
};

// Adds m^3/3 to the cholesky stage. Failure names the leading minor.
SpdFactor factor_spd(const Eigen::MatrixXd& G, double shift, OpCounters* counters = nullptr);

enum class PencilKind { PerronFrobenius, Koopman, KernelBasis };

// Eigenpairs sorted by descending modulus; ties keep the solver's original
// order, so complex-conjugate pairs stay adjacent.
struct EigenPairs {
    Eigen::VectorXcd values;
    Eigen::MatrixXcd vectors;  // one column per pair
    PencilKind kind = PencilKind::KernelBasis;
};

// Leading S eigenpairs of (G + shift I)^{-1} G_cross. S grows by one if the
// cut would split a conjugate pair. Adds 2 m^2 S to the eigen stage.
EigenPairs dense_transfer_eig(const SpdFactor& factor, const Eigen::MatrixXd& G_cross, int S,
                              PencilKind kind, OpCounters* counters = nullptr);

// Leading L eigenpairs (algebraic order) of a symmetric sparse kernel via
// Lanczos with full reorthogonalization; dense fallback for small problems
// and for L close to N. Eigenvectors carry the empirical normalization
// (1/N) sum phi^2 = 1. Adds the L*r*N model count to the eigen stage.
EigenPairs sparse_leading_eig(const SparseKernel& kernel, int L, OpCounters* counters = nullptr);

}  // namespace tda
