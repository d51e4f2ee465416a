#include "transferda/qmda.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "transferda/errors.hpp"
#include "transferda/kernels.hpp"
#include "transferda/spectral.hpp"

namespace tda {

Partition build_partition(const Eigen::VectorXd& values, int S) {
    const long long N = values.size();
    if (S < 1) throw PartitionError("build_partition: S must be >= 1");
    if (N < S) throw PartitionError("build_partition: fewer samples than bins");

    // sort by (value, index); rank blocks give the equal-measure bins
    std::vector<long long> order(N);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](long long a, long long b) {
        return values[a] != values[b] ? values[a] < values[b] : a < b;
    });

    long long distinct = 1;
    for (long long i = 1; i < N; ++i)
        if (values[order[i]] != values[order[i - 1]]) ++distinct;
    if (distinct < S)
        throw PartitionError("build_partition: degenerate partition, only " +
                             std::to_string(distinct) + " distinct values for " +
                             std::to_string(S) + " bins");

    Partition part;
    part.S = S;
    part.edges.resize(S + 1);
    part.cell_averages.resize(S);
    part.membership.assign(N, -1);
    part.edges[0] = values[order.front()];
    part.edges[S] = values[order.back()];

    for (int k = 0; k < S; ++k) {
        const long long lo = k * N / S;
        const long long hi = (k + 1) * N / S;  // exclusive
        if (k > 0) part.edges[k] = 0.5 * (values[order[lo - 1]] + values[order[lo]]);
        double acc = 0.0;
        for (long long i = lo; i < hi; ++i) {
            part.membership[order[i]] = k;
            acc += values[order[i]];
        }
        part.cell_averages[k] = acc / static_cast<double>(hi - lo);
    }
    for (int k = 1; k <= S; ++k)
        if (!(part.edges[k] >= part.edges[k - 1]))
            throw PartitionError("build_partition: edges not ascending (duplicate-heavy data)");
    return part;
}

int assign_bin(const Partition& partition, double y) {
    if (partition.S < 1) throw PartitionError("assign_bin: empty partition");
    // count interior edges <= y, clamped into range
    const double* first = partition.edges.data() + 1;
    const double* last = partition.edges.data() + partition.S;
    const long long count = std::upper_bound(first, last, y) - first;
    return static_cast<int>(std::clamp<long long>(count, 0, partition.S - 1));
}

Eigen::MatrixXd build_koopman(const Eigen::MatrixXd& basis, int q, OpCounters* counters) {
    const long long N = basis.rows(), L = basis.cols();
    if (q < 0 || q >= N) throw ConfigError("build_koopman: need 0 <= q < N");
    bump(counters, &OpCounters::koopman_build,
         static_cast<std::uint64_t>(N) * static_cast<std::uint64_t>(L) * static_cast<std::uint64_t>(L));
    return (basis.topRows(N - q).transpose() * basis.bottomRows(N - q)) /
           static_cast<double>(N);
}

std::vector<Eigen::MatrixXd> build_projectors(const Eigen::MatrixXd& basis,
                                              const Partition& partition, OpCounters* counters) {
    const long long N = basis.rows(), L = basis.cols();
    if (static_cast<long long>(partition.membership.size()) != N)
        throw PartitionError("build_projectors: partition does not match the basis samples");

    std::vector<std::vector<long long>> bins(partition.S);
    for (long long i = 0; i < N; ++i) bins[partition.membership[i]].push_back(i);

    std::vector<Eigen::MatrixXd> projectors;
    projectors.reserve(partition.S);
    for (int k = 0; k < partition.S; ++k) {
        if (bins[k].empty())
            throw PartitionError("build_projectors: bin " + std::to_string(k) + " is empty");
        Eigen::MatrixXd rows(bins[k].size(), L);
        for (std::size_t t = 0; t < bins[k].size(); ++t) rows.row(t) = basis.row(bins[k][t]);
        bump(counters, &OpCounters::projector_build,
             static_cast<std::uint64_t>(bins[k].size()) * static_cast<std::uint64_t>(L) *
                 static_cast<std::uint64_t>(L));
        projectors.push_back(rows.transpose() * rows / static_cast<double>(N));
    }
    return projectors;
}

QmdaModel qmda_fit(const Eigen::MatrixXd& data, const Eigen::VectorXd& h_values,
                   const QmdaParams& params, OpCounters* counters) {
    const long long N = data.rows();
    if (h_values.size() != N) throw ConfigError("qmda_fit: observable series length mismatch");
    if (params.L < 1) throw ConfigError("qmda_fit: L must be >= 1");
    if (params.q < 0) throw ConfigError("qmda_fit: q must be >= 0");

    QmdaModel model;
    model.q = params.q;
    model.r = params.r;
    model.k_bw = params.k_bw;
    model.epsilon = params.epsilon;
    model.multi_horizon = params.multi_horizon;

    model.bandwidths = vb_bandwidths(data, params.k_bw);
    const SparseKernel raw = vb_sparse_kernel(data, model.bandwidths, params.r, params.epsilon, counters);
    const SinkhornResult sk = sinkhorn_normalize(raw, params.sinkhorn_tol,
                                                 params.sinkhorn_max_iter, counters);
    model.sinkhorn_iterations = sk.iterations;

    const EigenPairs pairs = sparse_leading_eig(sk.kernel, params.L, counters);
    model.basis = pairs.vectors.real();
    model.basis_eigenvalues = pairs.values.real();

    model.partition = build_partition(h_values, params.S);
    model.U_q = build_koopman(model.basis, params.q, counters);
    if (params.multi_horizon) {
        model.U_multi.reserve(params.q + 1);
        for (int j = 0; j <= params.q; ++j)
            model.U_multi.push_back(j == params.q ? model.U_q
                                                  : build_koopman(model.basis, j, counters));
    }
    model.projectors = build_projectors(model.basis, model.partition, counters);
    return model;
}

DensityOperator qmda_init_state(int L) {
    if (L < 1) throw ConfigError("qmda_init_state: L must be >= 1");
    return Eigen::MatrixXd::Identity(L, L) / static_cast<double>(L);
}

DensityOperator qmda_evolve(const QmdaModel& model, const DensityOperator& rho,
                            OpCounters* counters) {
    const long long L = model.L();
    if (rho.rows() != L || rho.cols() != L) throw ConfigError("qmda_evolve: state shape mismatch");
    bump(counters, &OpCounters::evolve,
         2ull * static_cast<std::uint64_t>(L) * static_cast<std::uint64_t>(L) * static_cast<std::uint64_t>(L));
    bump_extra(counters, static_cast<std::uint64_t>(L));
    Eigen::MatrixXd out = model.U_q.transpose() * rho * model.U_q;
    const double tr = out.trace();
    if (!(tr > 1e-300))
        throw StarvationError("qmda_evolve: state trace collapsed; re-initialize the density");
    out /= tr;
    return 0.5 * (out + out.transpose()).eval();
}

Eigen::VectorXd qmda_probabilities(const QmdaModel& model, const DensityOperator& rho,
                                   OpCounters* counters) {
    const long long L = model.L();
    const int S = model.partition.S;
    if (rho.rows() != L || rho.cols() != L)
        throw ConfigError("qmda_probabilities: state shape mismatch");
    bump(counters, &OpCounters::measure,
         static_cast<std::uint64_t>(S) * static_cast<std::uint64_t>(L) * static_cast<std::uint64_t>(L));

    Eigen::VectorXd p(S);
    for (int i = 0; i < S; ++i) p[i] = model.projectors[i].cwiseProduct(rho).sum();
    const double worst = p.minCoeff();
    if (worst < -1e-10)
        throw Error("qmda_probabilities: probability " + std::to_string(worst) +
                    " below the clipping window (state not PSD?)");
    p = p.cwiseMax(0.0);
    const double total = p.sum();
    if (!(total > 0.0)) throw Error("qmda_probabilities: all bin probabilities vanished");
    return p / total;
}

DensityOperator qmda_update(const QmdaModel& model, const DensityOperator& rho, int bin,
                            OpCounters* counters) {
    const long long L = model.L();
    if (bin < 0 || bin >= model.partition.S) throw ConfigError("qmda_update: bin out of range");
    if (rho.rows() != L || rho.cols() != L) throw ConfigError("qmda_update: state shape mismatch");
    const Eigen::MatrixXd& E = model.projectors[bin];
    Eigen::MatrixXd out = E * rho * E;
    const double tr = out.trace();
    if (!(tr > 1e-300))
        throw MeasurementConflictError(
            "qmda_update: observed bin " + std::to_string(bin) +
            " has zero probability under the current state; skip the update or enlarge the basis");
    // counted only once the conditioning goes through, so skipped updates
    // leave the totals on the (K - skipped) model
    bump(counters, &OpCounters::update,
         2ull * static_cast<std::uint64_t>(L) * static_cast<std::uint64_t>(L) * static_cast<std::uint64_t>(L));
    bump_extra(counters, static_cast<std::uint64_t>(L));
    out /= tr;
    return 0.5 * (out + out.transpose()).eval();
}

}  // namespace tda
