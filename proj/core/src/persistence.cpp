#include "transferda/persistence.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "transferda/errors.hpp"

namespace tda {

namespace {

constexpr char kDatoMagic[8] = {'D', 'A', 'T', 'O', 'M', 'D', 'L', '1'};
constexpr char kQmdaMagic[8] = {'Q', 'M', 'D', 'A', 'M', 'D', 'L', '1'};
constexpr std::uint32_t kVersion = 1;

class Writer {
public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) throw PersistenceError("cannot open for writing: " + path);
        path_ = path;
    }

    void bytes(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        if (!out_) throw PersistenceError("write failed: " + path_);
    }

    void u64(std::uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(b, 8);
    }

    void u32(std::uint32_t v) {
        unsigned char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(b, 4);
    }

    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    void mat(const Eigen::MatrixXd& M) {
        u64(static_cast<std::uint64_t>(M.rows()));
        u64(static_cast<std::uint64_t>(M.cols()));
        for (long long j = 0; j < M.cols(); ++j)
            for (long long i = 0; i < M.rows(); ++i) f64(M(i, j));
    }

    void cmat(const Eigen::MatrixXcd& M) {
        u64(static_cast<std::uint64_t>(M.rows()));
        u64(static_cast<std::uint64_t>(M.cols()));
        for (long long j = 0; j < M.cols(); ++j)
            for (long long i = 0; i < M.rows(); ++i) {
                f64(M(i, j).real());
                f64(M(i, j).imag());
            }
    }

    void vec(const Eigen::VectorXd& v) { mat(v); }
    void cvec(const Eigen::VectorXcd& v) { cmat(v); }

private:
    std::ofstream out_;
    std::string path_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw PersistenceError("cannot open for reading: " + path);
    }

    void bytes(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n)
            throw TruncatedFileError("truncated model file " + path_ + ": wanted " +
                                     std::to_string(n) + " bytes at offset " +
                                     std::to_string(offset_) + ", got " +
                                     std::to_string(in_.gcount()));
        offset_ += n;
    }

    std::uint64_t u64() {
        unsigned char b[8];
        bytes(b, 8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return v;
    }

    std::uint32_t u32() {
        unsigned char b[4];
        bytes(b, 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return v;
    }

    double f64() { return std::bit_cast<double>(u64()); }

    long long dim() {
        const std::uint64_t v = u64();
        if (v > (1ull << 32))
            throw PersistenceError("implausible dimension in model file " + path_);
        return static_cast<long long>(v);
    }

    Eigen::MatrixXd mat() {
        const long long r = dim(), c = dim();
        Eigen::MatrixXd M(r, c);
        for (long long j = 0; j < c; ++j)
            for (long long i = 0; i < r; ++i) M(i, j) = f64();
        return M;
    }

    Eigen::MatrixXcd cmat() {
        const long long r = dim(), c = dim();
        Eigen::MatrixXcd M(r, c);
        for (long long j = 0; j < c; ++j)
            for (long long i = 0; i < r; ++i) {
                const double re = f64();
                const double im = f64();
                M(i, j) = {re, im};
            }
        return M;
    }

    Eigen::VectorXd vec() {
        const Eigen::MatrixXd M = mat();
        if (M.cols() != 1) throw PersistenceError("expected a vector in model file " + path_);
        return M.col(0);
    }

    Eigen::VectorXcd cvec() {
        const Eigen::MatrixXcd M = cmat();
        if (M.cols() != 1) throw PersistenceError("expected a vector in model file " + path_);
        return M.col(0);
    }

    void expect_magic(const char (&magic)[8]) {
        char got[8];
        bytes(got, 8);
        if (std::memcmp(got, magic, 8) != 0)
            throw BadMagicError("bad magic in model file " + path_ +
                                " (not a model of the requested kind)");
        const std::uint32_t ver = u32();
        if (ver != kVersion)
            throw BadVersionError("unsupported model version " + std::to_string(ver) + " in " +
                                  path_ + " (expected " + std::to_string(kVersion) + ")");
    }

    void expect_eof() {
        char c;
        in_.read(&c, 1);
        if (in_.gcount() != 0)
            throw PersistenceError("trailing bytes after model payload in " + path_);
    }

private:
    std::ifstream in_;
    std::string path_;
    std::uint64_t offset_ = 0;
};

}  // namespace

void save_model(const DatoModel& model, const std::string& path) {
    Writer w(path);
    w.bytes(kDatoMagic, 8);
    w.u32(kVersion);
    w.u64(static_cast<std::uint64_t>(model.m()));
    w.u64(static_cast<std::uint64_t>(model.n()));
    w.u64(static_cast<std::uint64_t>(model.S));
    w.u64(static_cast<std::uint64_t>(model.q));
    w.f64(model.sigma);
    w.f64(model.eps);
    w.u64(static_cast<std::uint64_t>(model.obs.selector.size()));
    for (const int s : model.obs.selector) w.u64(static_cast<std::uint64_t>(s));
    w.u64(model.obs.noise_seed);
    w.mat(model.obs.R);
    w.mat(model.R_inv);
    w.mat(model.X);
    w.cvec(model.lambdas);
    w.cvec(model.lambda_pow_q);
    w.cmat(model.Phi);
    w.cvec(model.lambdas_K);
    w.cmat(model.V_K);
    w.cmat(model.B);
    w.cmat(model.normal);
}

DatoModel load_dato_model(const std::string& path) {
    Reader r(path);
    r.expect_magic(kDatoMagic);
    DatoModel model;
    const long long m = r.dim();
    const long long n = r.dim();
    model.S = static_cast<int>(r.dim());
    model.q = static_cast<int>(r.dim());
    model.sigma = r.f64();
    model.eps = r.f64();
    const long long p = r.dim();
    model.obs.selector.resize(p);
    for (long long i = 0; i < p; ++i) model.obs.selector[i] = static_cast<int>(r.u64());
    model.obs.noise_seed = r.u64();
    model.obs.R = r.mat();
    model.R_inv = r.mat();
    model.X = r.mat();
    model.lambdas = r.cvec();
    model.lambda_pow_q = r.cvec();
    model.Phi = r.cmat();
    model.lambdas_K = r.cvec();
    model.V_K = r.cmat();
    model.B = r.cmat();
    model.normal = r.cmat();
    r.expect_eof();
    if (model.X.rows() != m || model.X.cols() != n || model.Phi.rows() != m ||
        model.Phi.cols() != model.S)
        throw PersistenceError("inconsistent dimensions in model file " + path);
    model.refresh_factor();
    return model;
}

void save_model(const QmdaModel& model, const std::string& path) {
    Writer w(path);
    w.bytes(kQmdaMagic, 8);
    w.u32(kVersion);
    w.u64(static_cast<std::uint64_t>(model.N()));
    w.u64(static_cast<std::uint64_t>(model.L()));
    w.u64(static_cast<std::uint64_t>(model.q));
    w.u64(static_cast<std::uint64_t>(model.r));
    w.u64(static_cast<std::uint64_t>(model.k_bw));
    w.u64(static_cast<std::uint64_t>(model.sinkhorn_iterations));
    w.u64(model.multi_horizon ? 1 : 0);
    w.f64(model.epsilon);
    w.mat(model.basis);
    w.vec(model.basis_eigenvalues);
    w.mat(model.U_q);
    w.u64(static_cast<std::uint64_t>(model.U_multi.size()));
    for (const auto& U : model.U_multi) w.mat(U);
    w.u64(static_cast<std::uint64_t>(model.projectors.size()));
    for (const auto& E : model.projectors) w.mat(E);
    w.u64(static_cast<std::uint64_t>(model.partition.S));
    w.vec(model.partition.edges);
    w.vec(model.partition.cell_averages);
    w.u64(static_cast<std::uint64_t>(model.partition.membership.size()));
    for (const int b : model.partition.membership) w.u64(static_cast<std::uint64_t>(b));
    w.vec(model.bandwidths);
}

QmdaModel load_qmda_model(const std::string& path) {
    Reader r(path);
    r.expect_magic(kQmdaMagic);
    QmdaModel model;
    const long long N = r.dim();
    const long long L = r.dim();
    model.q = static_cast<int>(r.dim());
    model.r = static_cast<int>(r.dim());
    model.k_bw = static_cast<int>(r.dim());
    model.sinkhorn_iterations = static_cast<int>(r.dim());
    model.multi_horizon = r.u64() != 0;
    model.epsilon = r.f64();
    model.basis = r.mat();
    model.basis_eigenvalues = r.vec();
    model.U_q = r.mat();
    const long long n_multi = r.dim();
    model.U_multi.reserve(n_multi);
    for (long long i = 0; i < n_multi; ++i) model.U_multi.push_back(r.mat());
    const long long n_proj = r.dim();
    model.projectors.reserve(n_proj);
    for (long long i = 0; i < n_proj; ++i) model.projectors.push_back(r.mat());
    model.partition.S = static_cast<int>(r.dim());
    model.partition.edges = r.vec();
    model.partition.cell_averages = r.vec();
    const long long nm = r.dim();
    model.partition.membership.resize(nm);
    for (long long i = 0; i < nm; ++i) model.partition.membership[i] = static_cast<int>(r.u64());
    model.bandwidths = r.vec();
    r.expect_eof();
    if (model.basis.rows() != N || model.basis.cols() != L ||
        static_cast<long long>(model.projectors.size()) != model.partition.S)
        throw PersistenceError("inconsistent dimensions in model file " + path);
    return model;
}

}  // namespace tda
