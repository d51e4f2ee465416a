#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <string>

namespace tda {

// Monotone operation counters shared by both pipelines. Every instrumented
// stage adds the closed-form model count documented with the operation (not a
// measured flop count), so totals can be compared against the cost model with
// integer exactness. flops_model aggregates all stage increments plus the
// sub-leading terms (scalar rescales, elementwise products) that the stage
// formulas drop. kernel_evals counts kernel function evaluations only.
struct OpCounters {
    std::atomic<std::uint64_t> kernel_evals{0};
    std::atomic<std::uint64_t> flops_model{0};

    std::atomic<std::uint64_t> gram{0};
    std::atomic<std::uint64_t> cholesky{0};
    std::atomic<std::uint64_t> eigen{0};
    std::atomic<std::uint64_t> phi{0};
    std::atomic<std::uint64_t> predict{0};
    std::atomic<std::uint64_t> likelihood{0};
    std::atomic<std::uint64_t> project{0};
    std::atomic<std::uint64_t> reconstruct{0};
    std::atomic<std::uint64_t> forecast{0};
    std::atomic<std::uint64_t> sinkhorn{0};
    std::atomic<std::uint64_t> koopman_build{0};
    std::atomic<std::uint64_t> projector_build{0};
    std::atomic<std::uint64_t> evolve{0};
    std::atomic<std::uint64_t> measure{0};
    std::atomic<std::uint64_t> update{0};
};

using CounterField = std::atomic<std::uint64_t> OpCounters::*;

// stage increment; also feeds the aggregate
inline void bump(OpCounters* c, CounterField field, std::uint64_t v) {
    if (!c) return;
    (c->*field) += v;
    c->flops_model += v;
}

// sub-leading work tracked only in the aggregate
inline void bump_extra(OpCounters* c, std::uint64_t v) {
    if (c) c->flops_model += v;
}

inline void bump_kernel_evals(OpCounters* c, std::uint64_t v) {
    if (c) c->kernel_evals += v;
}

// Plain-value copy of the counters, usable for per-cycle deltas and reports.
struct CounterSnapshot {
    std::uint64_t kernel_evals = 0;
    std::uint64_t flops_model = 0;
    std::uint64_t gram = 0;
    std::uint64_t cholesky = 0;
    std::uint64_t eigen = 0;
    std::uint64_t phi = 0;
    std::uint64_t predict = 0;
    std::uint64_t likelihood = 0;
    std::uint64_t project = 0;
    std::uint64_t reconstruct = 0;
    std::uint64_t forecast = 0;
    std::uint64_t sinkhorn = 0;
    std::uint64_t koopman_build = 0;
    std::uint64_t projector_build = 0;
    std::uint64_t evolve = 0;
    std::uint64_t measure = 0;
    std::uint64_t update = 0;
};

CounterSnapshot snapshot(const OpCounters& c);
CounterSnapshot counter_delta(const CounterSnapshot& after, const CounterSnapshot& before);
CounterSnapshot counter_sum(const CounterSnapshot& a, const CounterSnapshot& b);
std::map<std::string, std::uint64_t> counter_map(const CounterSnapshot& s);
bool operator==(const CounterSnapshot& a, const CounterSnapshot& b);

}  // namespace tda
