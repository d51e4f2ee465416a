#include "transferda/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "transferda/errors.hpp"
#include "transferda/parallel.hpp"
#include "transferda/rng.hpp"

namespace tda {

double median_bandwidth(const Eigen::MatrixXd& X, int subsample_cap, std::uint64_t seed) {
    const long long m = X.rows();
    if (m < 2) throw KernelError("median_bandwidth: need at least two points");
    if (subsample_cap < 2) throw ConfigError("median_bandwidth: subsample_cap must be >= 2");

    std::vector<long long> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    long long count = m;
    if (m > subsample_cap) {
        // seeded partial Fisher-Yates; keeps the first subsample_cap slots
        Rng rng(seed);
        for (int i = 0; i < subsample_cap; ++i) {
            const long long j = i + static_cast<long long>(rng.raw() % static_cast<std::uint64_t>(m - i));
            std::swap(idx[i], idx[j]);
        }
        count = subsample_cap;
    }

    std::vector<double> dists;
    dists.reserve(static_cast<std::size_t>(count) * (count - 1) / 2);
    for (long long a = 0; a < count; ++a)
        for (long long b = a + 1; b < count; ++b)
            dists.push_back((X.row(idx[a]) - X.row(idx[b])).norm());

    const std::size_t mid = (dists.size() - 1) / 2;  // lower median for even counts
    std::nth_element(dists.begin(), dists.begin() + mid, dists.end());
    const double med = dists[mid];
    if (!(med > 0.0))
        throw KernelError("median_bandwidth: zero bandwidth (all sampled points coincide)");
    return med;
}

Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double sigma,
                         OpCounters* counters) {
    if (A.cols() != B.cols()) throw KernelError("rbf_gram: dimension mismatch between point sets");
    if (!(sigma > 0.0)) throw KernelError("rbf_gram: sigma must be positive");

    const long long ma = A.rows(), mb = B.rows(), d = A.cols();
    bump_kernel_evals(counters, static_cast<std::uint64_t>(ma) * mb);
    bump(counters, &OpCounters::gram, static_cast<std::uint64_t>(d) * ma * mb);

    const Eigen::VectorXd a2 = A.rowwise().squaredNorm();
    const Eigen::VectorXd b2 = B.rowwise().squaredNorm();
    Eigen::MatrixXd G = -2.0 * (A * B.transpose());
    G.colwise() += a2;
    G.rowwise() += b2.transpose();
    const double scale = -1.0 / (2.0 * sigma * sigma);
    return (G.array().max(0.0) * scale).exp();
}

Eigen::VectorXd vb_bandwidths(const Eigen::MatrixXd& Y, int k_bw) {
    const long long N = Y.rows();
    if (k_bw < 1) throw ConfigError("vb_bandwidths: k_bw must be >= 1");
    if (N <= k_bw) throw KernelError("vb_bandwidths: need more than k_bw points");

    Eigen::VectorXd sigma(N);
    std::atomic<long long> bad{-1};
    parallel_for(N, [&](long long begin, long long end) {
        std::vector<double> work(N);
        for (long long i = begin; i < end; ++i) {
            for (long long j = 0; j < N; ++j) work[j] = (Y.row(i) - Y.row(j)).squaredNorm();
            work[i] = std::numeric_limits<double>::infinity();  // exclude self
            std::nth_element(work.begin(), work.begin() + (k_bw - 1), work.end());
            std::sort(work.begin(), work.begin() + k_bw);  // fixed summation order
            double acc = 0.0;
            for (int k = 0; k < k_bw; ++k) acc += std::sqrt(work[k]);
            sigma[i] = acc / k_bw;
            if (!(sigma[i] > 0.0)) {
                long long expect = -1;
                bad.compare_exchange_strong(expect, i);
            }
        }
    });
    if (bad.load() >= 0)
        throw KernelError("vb_bandwidths: zero bandwidth at point " + std::to_string(bad.load()) +
                          " (nearest neighbours coincide)");
    return sigma;
}

SparseKernel vb_sparse_kernel(const Eigen::MatrixXd& Y, const Eigen::VectorXd& bandwidths, int r,
                              double epsilon, OpCounters* counters) {
    const long long N = Y.rows();
    if (bandwidths.size() != N) throw KernelError("vb_sparse_kernel: bandwidth field size mismatch");
    if (!(epsilon > 0.0)) throw KernelError("vb_sparse_kernel: epsilon must be positive");
    if (r < 1 || r >= N)
        throw KernelError("vb_sparse_kernel: r must satisfy 1 <= r <= N-1, got r=" +
                          std::to_string(r) + " with N=" + std::to_string(N));
    for (long long i = 0; i < N; ++i)
        if (!(bandwidths[i] > 0.0))
            throw KernelError("vb_sparse_kernel: non-positive bandwidth at point " + std::to_string(i));

    bump_kernel_evals(counters, static_cast<std::uint64_t>(N) * N);
    bump(counters, &OpCounters::gram, static_cast<std::uint64_t>(Y.cols()) * N * N);

    // r nearest per row (self excluded, ties by index), then union-symmetrize
    std::vector<std::vector<long long>> selected(N);
    parallel_for(N, [&](long long begin, long long end) {
        std::vector<std::pair<double, long long>> order(N);
        for (long long i = begin; i < end; ++i) {
            for (long long j = 0; j < N; ++j)
                order[j] = {(Y.row(i) - Y.row(j)).squaredNorm(), j};
            order[i].first = std::numeric_limits<double>::infinity();
            std::partial_sort(order.begin(), order.begin() + r, order.end());
            selected[i].reserve(r);
            for (int k = 0; k < r; ++k) selected[i].push_back(order[k].second);
        }
    });

    std::vector<std::vector<long long>> adj(N);
    for (long long i = 0; i < N; ++i) {
        adj[i].push_back(i);  // diagonal always kept
        for (const long long j : selected[i]) {
            adj[i].push_back(j);
            adj[j].push_back(i);
        }
    }

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(N) * (2 * r + 1));
    for (long long i = 0; i < N; ++i) {
        auto& row = adj[i];
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
        for (const long long j : row) {
            if (j < i) continue;  // one evaluation per unordered pair
            const double d2 = (Y.row(i) - Y.row(j)).squaredNorm();
            const double v = std::exp(-d2 / (epsilon * bandwidths[i] * bandwidths[j]));
            trips.emplace_back(i, j, v);
            if (j != i) trips.emplace_back(j, i, v);
        }
    }

    SparseKernel out;
    out.r = r;
    out.epsilon = epsilon;
    out.K.resize(N, N);
    out.K.setFromTriplets(trips.begin(), trips.end());
    out.K.makeCompressed();
    return out;
}

SinkhornResult sinkhorn_normalize(const SparseKernel& kernel, double tol, int max_iter,
                                  OpCounters* counters) {
    const long long N = kernel.K.rows();
    if (N == 0) throw KernelError("sinkhorn_normalize: empty kernel");
    if (max_iter < 1) throw ConfigError("sinkhorn_normalize: max_iter must be >= 1");

    Eigen::VectorXd d = Eigen::VectorXd::Ones(N);
    double dev = std::numeric_limits<double>::infinity();
    int used = 0;
    bool converged = false;
    for (int iter = 1; iter <= max_iter; ++iter) {
        bump(counters, &OpCounters::sinkhorn,
             static_cast<std::uint64_t>(kernel.r) * static_cast<std::uint64_t>(N));
        const Eigen::VectorXd s = kernel.K * d;
        const Eigen::VectorXd rowsum = d.cwiseProduct(s);
        dev = (rowsum.array() - 1.0).abs().maxCoeff();
        used = iter;
        if (dev <= tol) {
            converged = true;
            break;
        }
        d = d.cwiseQuotient(rowsum.cwiseSqrt());
    }
    if (!converged)
        throw KernelError("sinkhorn_normalize: no convergence after " + std::to_string(max_iter) +
                          " sweeps; worst row-sum deviation " + std::to_string(dev));

    SinkhornResult res;
    res.kernel.r = kernel.r;
    res.kernel.epsilon = kernel.epsilon;
    res.kernel.K = kernel.K;
    for (long long i = 0; i < N; ++i)
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(res.kernel.K, i); it; ++it)
            it.valueRef() *= d[i] * d[it.col()];  // commutative product keeps exact symmetry
    res.d = d;
    res.iterations = used;
    res.max_deviation = dev;
    return res;
}

}  // namespace tda
