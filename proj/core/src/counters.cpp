#include "transferda/counters.hpp"

namespace tda {

CounterSnapshot snapshot(const OpCounters& c) {
    CounterSnapshot s;
    s.kernel_evals = c.kernel_evals.load();
    s.flops_model = c.flops_model.load();
    s.gram = c.gram.load();
    s.cholesky = c.cholesky.load();
    s.eigen = c.eigen.load();
    s.phi = c.phi.load();
    s.predict = c.predict.load();
    s.likelihood = c.likelihood.load();
    s.project = c.project.load();
    s.reconstruct = c.reconstruct.load();
    s.forecast = c.forecast.load();
    s.sinkhorn = c.sinkhorn.load();
    s.koopman_build = c.koopman_build.load();
    s.projector_build = c.projector_build.load();
    s.evolve = c.evolve.load();
    s.measure = c.measure.load();
    s.update = c.update.load();
    return s;
}

namespace {

template <class F>
CounterSnapshot combine(const CounterSnapshot& a, const CounterSnapshot& b, F op) {
    CounterSnapshot r;
    r.kernel_evals = op(a.kernel_evals, b.kernel_evals);
    r.flops_model = op(a.flops_model, b.flops_model);
    r.gram = op(a.gram, b.gram);
    r.cholesky = op(a.cholesky, b.cholesky);
    r.eigen = op(a.eigen, b.eigen);
    r.phi = op(a.phi, b.phi);
    r.predict = op(a.predict, b.predict);
    r.likelihood = op(a.likelihood, b.likelihood);
    r.project = op(a.project, b.project);
    r.reconstruct = op(a.reconstruct, b.reconstruct);
    r.forecast = op(a.forecast, b.forecast);
    r.sinkhorn = op(a.sinkhorn, b.sinkhorn);
    r.koopman_build = op(a.koopman_build, b.koopman_build);
    r.projector_build = op(a.projector_build, b.projector_build);
    r.evolve = op(a.evolve, b.evolve);
    r.measure = op(a.measure, b.measure);
    r.update = op(a.update, b.update);
    return r;
}

}  // namespace

CounterSnapshot counter_delta(const CounterSnapshot& after, const CounterSnapshot& before) {
    return combine(after, before, [](std::uint64_t x, std::uint64_t y) { return x - y; });
}

CounterSnapshot counter_sum(const CounterSnapshot& a, const CounterSnapshot& b) {
    return combine(a, b, [](std::uint64_t x, std::uint64_t y) { return x + y; });
}

std::map<std::string, std::uint64_t> counter_map(const CounterSnapshot& s) {
    return {
        {"kernel_evals", s.kernel_evals},
        {"flops_model", s.flops_model},
        {"gram", s.gram},
        {"cholesky", s.cholesky},
        {"eigen", s.eigen},
        {"phi", s.phi},
        {"predict", s.predict},
        {"likelihood", s.likelihood},
        {"project", s.project},
        {"reconstruct", s.reconstruct},
        {"forecast", s.forecast},
        {"sinkhorn", s.sinkhorn},
        {"koopman_build", s.koopman_build},
        {"projector_build", s.projector_build},
        {"evolve", s.evolve},
        {"measure", s.measure},
        {"update", s.update},
    };
}

bool operator==(const CounterSnapshot& a, const CounterSnapshot& b) {
    return counter_map(a) == counter_map(b);
}

}  // namespace tda
