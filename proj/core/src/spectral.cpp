#include "transferda/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "transferda/errors.hpp"
#include "transferda/rng.hpp"

namespace tda {

Eigen::MatrixXd SpdFactor::solve(const Eigen::MatrixXd& B) const {
    Eigen::MatrixXd y = L.triangularView<Eigen::Lower>().solve(B);
    return L.transpose().triangularView<Eigen::Upper>().solve(y);
}

Eigen::VectorXd SpdFactor::solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd y = L.triangularView<Eigen::Lower>().solve(b);
    return L.transpose().triangularView<Eigen::Upper>().solve(y);
}

Eigen::MatrixXcd SpdFactor::solve(const Eigen::MatrixXcd& B) const {
    // real factor applied to real and imaginary parts separately
    Eigen::MatrixXcd out(B.rows(), B.cols());
    out.real() = solve(Eigen::MatrixXd(B.real()));
    out.imag() = solve(Eigen::MatrixXd(B.imag()));
    return out;
}

namespace {

// locate the first non-positive pivot for the error message
long long first_bad_minor(const Eigen::MatrixXd& A) {
    const long long m = A.rows();
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(m, m);
    for (long long i = 0; i < m; ++i) {
        for (long long j = 0; j <= i; ++j) {
            double s = A(i, j);
            for (long long k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
            if (i == j) {
                if (s <= 0.0) return i;
                L(i, i) = std::sqrt(s);
            } else {
                L(i, j) = s / L(j, j);
            }
        }
    }
    return m - 1;
}

}  // namespace

SpdFactor factor_spd(const Eigen::MatrixXd& G, double shift, OpCounters* counters) {
    const long long m = G.rows();
    if (m == 0 || G.cols() != m) throw FactorizationError("factor_spd: matrix must be square");
    const double scale = std::max(1.0, G.cwiseAbs().maxCoeff());
    if ((G - G.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
        throw FactorizationError("factor_spd: matrix is not symmetric");
    if (shift < 0.0) throw FactorizationError("factor_spd: shift must be non-negative");

    bump(counters, &OpCounters::cholesky,
         static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(m) / 3);

    Eigen::MatrixXd A = G;
    A.diagonal().array() += shift;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success)
        throw FactorizationError("factor_spd: not positive definite (leading minor " +
                                 std::to_string(first_bad_minor(A) + 1) + ")");
    SpdFactor f;
    f.L = llt.matrixL();
    f.shift = shift;
    f.m = m;
    return f;
}

namespace {

// descending modulus, stable so solver-adjacent conjugate pairs stay adjacent
std::vector<long long> modulus_order(const Eigen::VectorXcd& vals) {
    std::vector<long long> idx(vals.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](long long a, long long b) {
        return std::abs(vals[a]) > std::abs(vals[b]);
    });
    return idx;
}

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
    long long imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v[imax] < 0.0) v = -v;
}

}  // namespace

EigenPairs dense_transfer_eig(const SpdFactor& factor, const Eigen::MatrixXd& G_cross, int S,
                              PencilKind kind, OpCounters* counters) {
    const long long m = factor.m;
    if (G_cross.rows() != m || G_cross.cols() != m)
        throw EigenSolverError("dense_transfer_eig: cross-Gram shape mismatch");
    if (S < 1 || S > m)
        throw EigenSolverError("dense_transfer_eig: need 1 <= S <= m, got S=" + std::to_string(S));

    bump(counters, &OpCounters::eigen,
         2ull * static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(S));

    const Eigen::MatrixXd M = factor.solve(G_cross);
    Eigen::EigenSolver<Eigen::MatrixXd> es(M);
    if (es.info() != Eigen::Success)
        throw EigenSolverError("dense_transfer_eig: eigensolver failed to converge");

    const Eigen::VectorXcd vals = es.eigenvalues();
    const Eigen::MatrixXcd vecs = es.eigenvectors();
    const std::vector<long long> order = modulus_order(vals);

    long long keep = S;
    if (keep < m) {
        const std::complex<double> a = vals[order[keep - 1]];
        const std::complex<double> b = vals[order[keep]];
        if (a.imag() != 0.0 && std::abs(a - std::conj(b)) <= 1e-10 * (1.0 + std::abs(a)))
            ++keep;  // don't split a conjugate pair at the cut
    }

    EigenPairs out;
    out.kind = kind;
    out.values.resize(keep);
    out.vectors.resize(m, keep);
    for (long long k = 0; k < keep; ++k) {
        out.values[k] = vals[order[k]];
        out.vectors.col(k) = vecs.col(order[k]);
    }
    return out;
}

namespace {

EigenPairs dense_symmetric_leading(const SparseKernel& kernel, int L) {
    const long long N = kernel.K.rows();
    Eigen::MatrixXd D(kernel.K);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D);
    if (es.info() != Eigen::Success)
        throw EigenSolverError("sparse_leading_eig: dense fallback failed to converge");

    EigenPairs out;
    out.kind = PencilKind::KernelBasis;
    out.values.resize(L);
    out.vectors.resize(N, L);
    const double root_n = std::sqrt(static_cast<double>(N));
    for (int k = 0; k < L; ++k) {
        const long long src = N - 1 - k;  // ascending order -> take from the top
        Eigen::VectorXd v = es.eigenvectors().col(src) * root_n;
        fix_sign(v);
        out.values[k] = es.eigenvalues()[src];
        out.vectors.col(k) = v.cast<std::complex<double>>();
    }
    return out;
}

}  // namespace

EigenPairs sparse_leading_eig(const SparseKernel& kernel, int L, OpCounters* counters) {
    const long long N = kernel.K.rows();
    if (L < 1 || L > N)
        throw EigenSolverError("sparse_leading_eig: need 1 <= L <= N, got L=" + std::to_string(L));

    bump(counters, &OpCounters::eigen,
         static_cast<std::uint64_t>(L) * static_cast<std::uint64_t>(kernel.r) * static_cast<std::uint64_t>(N));

    if (N <= 600 || 3ll * L >= N) return dense_symmetric_leading(kernel, L);

    // Lanczos with full reorthogonalization; deterministic seeded start.  Clustered
    // tails (harmonic pairs on the attractor) converge slowly, so the budget is generous.
    const long long kmax = std::min<long long>(N, std::max<long long>(10ll * L + 400, 200));
    Eigen::MatrixXd V(N, kmax);
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(kmax);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(kmax);

    Rng rng(0x73706563u);
    {
        Eigen::VectorXd v0(N);
        for (long long i = 0; i < N; ++i) v0[i] = rng.normal();
        V.col(0) = v0 / v0.norm();
    }

    const double root_n = std::sqrt(static_cast<double>(N));
    for (long long j = 0; j < kmax; ++j) {
        Eigen::VectorXd w = kernel.K * V.col(j);
        alpha[j] = V.col(j).dot(w);
        w -= alpha[j] * V.col(j);
        if (j > 0) w -= beta[j - 1] * V.col(j - 1);
        for (int pass = 0; pass < 2; ++pass) {
            const Eigen::VectorXd proj = V.leftCols(j + 1).transpose() * w;
            w -= V.leftCols(j + 1) * proj;
        }
        double b = w.norm();
        if (b < 1e-13) {
            // invariant subspace hit: restart with a fresh orthogonalized vector
            Eigen::VectorXd fresh(N);
            for (long long i = 0; i < N; ++i) fresh[i] = rng.normal();
            for (int pass = 0; pass < 2; ++pass)
                fresh -= V.leftCols(j + 1) * (V.leftCols(j + 1).transpose() * fresh);
            fresh.normalize();
            b = 0.0;
            if (j + 1 < kmax) V.col(j + 1) = fresh;
        } else if (j + 1 < kmax) {
            V.col(j + 1) = w / b;
        }
        beta[j] = b;

        const long long k = j + 1;
        const bool tail = (k == kmax);
        if (k < L + 2 || (k % 25 != 0 && !tail)) continue;

        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
        T.diagonal() = alpha.head(k);
        for (long long i = 0; i + 1 < k; ++i) T(i, i + 1) = T(i + 1, i) = beta[i];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tes(T);
        if (tes.info() != Eigen::Success) continue;

        const double tol = 1e-9 * std::max(1.0, std::abs(tes.eigenvalues()[k - 1]));
        bool ok = true;
        for (int t = 0; t < L; ++t) {
            const double resid = std::abs(beta[k - 1] * tes.eigenvectors()(k - 1, k - 1 - t));
            if (resid > tol) {
                ok = false;
                break;
            }
        }
        if (!ok && !tail) continue;
        if (!ok) {
            // exhausted the Krylov budget; the dense path is slower but cannot stall
            if (N <= 8000) return dense_symmetric_leading(kernel, L);
            throw EigenSolverError("sparse_leading_eig: Lanczos stalled before the leading " +
                                   std::to_string(L) + " pairs converged");
        }

        EigenPairs out;
        out.kind = PencilKind::KernelBasis;
        out.values.resize(L);
        out.vectors.resize(N, L);
        for (int t = 0; t < L; ++t) {
            const long long src = k - 1 - t;
            Eigen::VectorXd x = V.leftCols(k) * tes.eigenvectors().col(src);
            x /= x.norm();
            const double theta = tes.eigenvalues()[src];
            if ((kernel.K * x - theta * x).norm() > 1e-6 * std::max(1.0, std::abs(theta)))
                throw EigenSolverError("sparse_leading_eig: residual check failed for pair " +
                                       std::to_string(t));
            x *= root_n;
            fix_sign(x);
            out.values[t] = theta;
            out.vectors.col(t) = x.cast<std::complex<double>>();
        }
        return out;
    }
    throw EigenSolverError("sparse_leading_eig: Lanczos did not converge");
}

}  // namespace tda
