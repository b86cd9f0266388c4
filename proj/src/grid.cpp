#include "qcurv/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>

namespace qcurv {

namespace {

constexpr double kTwoPi = GridSpec::domain_length();

// FFTW plans are created once per grid size; planning is not thread-safe but
// execution through the new-array interface is.
struct PlanPair {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
};

std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

const PlanPair& plans_for(int n) {
    static std::map<int, PlanPair> cache;
    std::lock_guard<std::mutex> lock(plan_mutex());
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    GridSpec s(n);
    double* r = fftw_alloc_real(s.size());
    fftw_complex* c = fftw_alloc_complex(s.spectral_size());
    int dims[4] = {n, n, n, n};
    PlanPair p;
    p.fwd = fftw_plan_dft_r2c(4, dims, r, c, FFTW_ESTIMATE);
    p.bwd = fftw_plan_dft_c2r(4, dims, c, r, FFTW_ESTIMATE);
    fftw_free(r);
    fftw_free(c);
    if (!p.fwd || !p.bwd) throw std::runtime_error("fftw planning failed");
    return cache.emplace(n, p).first->second;
}

struct RealBuf {
    double* p;
    explicit RealBuf(std::size_t n) : p(fftw_alloc_real(n)) {}
    ~RealBuf() { fftw_free(p); }
};
struct ComplexBuf {
    fftw_complex* p;
    explicit ComplexBuf(std::size_t n) : p(fftw_alloc_complex(n)) {}
    ~ComplexBuf() { fftw_free(p); }
};

}  // namespace

GridSpec::GridSpec(int n_per_axis) : n(n_per_axis) {
    if (n < 8 || n % 2 != 0) {
        std::ostringstream os;
        os << "grid size must be even and >= 8, got " << n;
        throw std::invalid_argument(os.str());
    }
}

double GridSpec::spacing() const { return kTwoPi / n; }

Index4 GridSpec::unflatten(std::size_t idx) const {
    Index4 j;
    for (int a = 3; a >= 0; --a) {
        j[a] = int(idx % n);
        idx /= n;
    }
    return j;
}

std::size_t GridSpec::flatten(const Index4& j) const {
    std::size_t idx = 0;
    for (int a = 0; a < 4; ++a) idx = idx * n + std::size_t(((j[a] % n) + n) % n);
    return idx;
}

Point4 GridSpec::point(std::size_t idx) const {
    Index4 j = unflatten(idx);
    double h = spacing();
    return {j[0] * h, j[1] * h, j[2] * h, j[3] * h};
}

ScalarField::ScalarField(GridSpec s, std::vector<double> v) : spec(s), values(std::move(v)) {
    if (values.size() != spec.size()) throw std::invalid_argument("field size does not match grid");
}

void require_same_grid(const ScalarField& a, const ScalarField& b, const char* where) {
    if (!(a.spec == b.spec) || a.values.size() != b.values.size()) {
        std::ostringstream os;
        os << where << ": grid mismatch (" << a.spec.n << " vs " << b.spec.n << ")";
        throw std::invalid_argument(os.str());
    }
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
    require_same_grid(*this, o, "operator+=");
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
    return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
    require_same_grid(*this, o, "operator-=");
    for (std::size_t i = 0; i < values.size(); ++i) values[i] -= o.values[i];
    return *this;
}

ScalarField& ScalarField::operator*=(double a) {
    for (double& x : values) x *= a;
    return *this;
}

ScalarField& ScalarField::axpy(double a, const ScalarField& x) {
    require_same_grid(*this, x, "axpy");
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += a * x.values[i];
    return *this;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double a, ScalarField b) { return b *= a; }

double mean(const ScalarField& u) {
    double s[4] = {0, 0, 0, 0};
    std::size_t n = u.values.size(), i = 0;
    for (; i + 4 <= n; i += 4)
        for (int k = 0; k < 4; ++k) s[k] += u.values[i + k];
    for (; i < n; ++i) s[0] += u.values[i];
    return (s[0] + s[1] + s[2] + s[3]) / double(n);
}

double inner(const ScalarField& u, const ScalarField& v) {
    require_same_grid(u, v, "inner");
    double s[4] = {0, 0, 0, 0};
    std::size_t n = u.values.size(), i = 0;
    for (; i + 4 <= n; i += 4)
        for (int k = 0; k < 4; ++k) s[k] += u.values[i + k] * v.values[i + k];
    for (; i < n; ++i) s[0] += u.values[i] * v.values[i];
    return (s[0] + s[1] + s[2] + s[3]) / double(n);
}

double max_abs(const ScalarField& u) {
    double m = 0;
    for (double x : u.values) m = std::max(m, std::abs(x));
    return m;
}

double max_value(const ScalarField& u) {
    double m = -INFINITY;
    for (double x : u.values) m = std::max(m, x);
    return m;
}

double min_value(const ScalarField& u) {
    double m = INFINITY;
    for (double x : u.values) m = std::min(m, x);
    return m;
}

ScalarField pointwise(const ScalarField& u, const std::function<double(double)>& fn) {
    ScalarField out(u.spec);
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = fn(u[i]);
    return out;
}

ScalarField product(const ScalarField& u, const ScalarField& v) {
    require_same_grid(u, v, "product");
    ScalarField out(u.spec);
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] * v[i];
    return out;
}

double periodic_distance(const Point4& x, const Point4& c) {
    double s = 0;
    for (int a = 0; a < 4; ++a) {
        double d = std::remainder(x[a] - c[a], kTwoPi);
        s += d * d;
    }
    return std::sqrt(s);
}

ScalarField sample(const std::function<double(const Point4&)>& fn, GridSpec spec) {
    ScalarField out(spec);
    for (std::size_t i = 0; i < spec.size(); ++i) {
        double y = fn(spec.point(i));
        if (!std::isfinite(y)) {
            Index4 j = spec.unflatten(i);
            std::ostringstream os;
            os << "non-finite sample at grid index (" << j[0] << "," << j[1] << "," << j[2] << ","
               << j[3] << ")";
            throw std::domain_error(os.str());
        }
        out[i] = y;
    }
    return out;
}

Spectrum forward(const ScalarField& u) {
    const PlanPair& p = plans_for(u.spec.n);
    RealBuf in(u.size());
    ComplexBuf out(u.spec.spectral_size());
    std::copy(u.values.begin(), u.values.end(), in.p);
    fftw_execute_dft_r2c(p.fwd, in.p, out.p);
    Spectrum s{u.spec, std::vector<std::complex<double>>(u.spec.spectral_size())};
    for (std::size_t i = 0; i < s.coeffs.size(); ++i) s.coeffs[i] = {out.p[i][0], out.p[i][1]};
    return s;
}

ScalarField inverse(const Spectrum& s) {
    const PlanPair& p = plans_for(s.spec.n);
    ComplexBuf in(s.spec.spectral_size());
    RealBuf out(s.spec.size());
    for (std::size_t i = 0; i < s.coeffs.size(); ++i) {
        in.p[i][0] = s.coeffs[i].real();
        in.p[i][1] = s.coeffs[i].imag();
    }
    fftw_execute_dft_c2r(p.bwd, in.p, out.p);
    ScalarField u(s.spec);
    double scale = 1.0 / double(s.spec.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = out.p[i] * scale;
    return u;
}

void for_each_mode(const GridSpec& spec, const std::function<void(std::size_t, const Index4&)>& fn) {
    int n = spec.n, h = n / 2 + 1;
    std::size_t idx = 0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c)
                for (int d = 0; d < h; ++d, ++idx)
                    fn(idx, Index4{frequency(a, n), frequency(b, n), frequency(c, n), d});
}

int hermitian_weight(int k3_index, int n) { return (k3_index == 0 || k3_index == n / 2) ? 1 : 2; }

FourierMultiplier FourierMultiplier::from_symbol(GridSpec spec,
                                                 const std::function<double(const Index4&)>& m) {
    FourierMultiplier fm{spec, std::vector<double>(spec.spectral_size()), 0.0};
    for_each_mode(spec, [&](std::size_t i, const Index4& k) { fm.symbol[i] = m(k); });
    fm.zero_mode = fm.symbol[0];
    return fm;
}

namespace {
double ksq(const Index4& k) {
    return double(k[0]) * k[0] + double(k[1]) * k[1] + double(k[2]) * k[2] + double(k[3]) * k[3];
}
}  // namespace

FourierMultiplier FourierMultiplier::laplacian(GridSpec spec) {
    return from_symbol(spec, [](const Index4& k) { return -ksq(k); });
}

FourierMultiplier FourierMultiplier::bilaplacian(GridSpec spec) {
    return from_symbol(spec, [](const Index4& k) { return ksq(k) * ksq(k); });
}

ScalarField apply_multiplier(const ScalarField& u, const FourierMultiplier& m) {
    if (!(u.spec == m.spec)) throw std::invalid_argument("apply_multiplier: grid mismatch");
    Spectrum s = forward(u);
    for (std::size_t i = 0; i < s.coeffs.size(); ++i) s.coeffs[i] *= m.symbol[i];
    return inverse(s);
}

ScalarField laplacian(const ScalarField& u) {
    Spectrum s = forward(u);
    for_each_mode(u.spec, [&](std::size_t i, const Index4& k) { s.coeffs[i] *= -ksq(k); });
    return inverse(s);
}

ScalarField bilaplacian(const ScalarField& u) {
    Spectrum s = forward(u);
    for_each_mode(u.spec, [&](std::size_t i, const Index4& k) {
        double q = ksq(k);
        s.coeffs[i] *= q * q;
    });
    return inverse(s);
}

namespace {
Spectrum differentiate(const Spectrum& s, int axis) {
    Spectrum d = s;
    int n = s.spec.n;
    for_each_mode(s.spec, [&](std::size_t i, const Index4& k) {
        int ka = k[axis];
        if (std::abs(ka) == n / 2) {
            d.coeffs[i] = 0.0;
        } else {
            d.coeffs[i] *= std::complex<double>(0.0, double(ka));
        }
    });
    return d;
}
}  // namespace

ScalarField partial(const ScalarField& u, int axis) {
    if (axis < 0 || axis > 3) throw std::invalid_argument("partial: axis out of range");
    return inverse(differentiate(forward(u), axis));
}

std::array<ScalarField, 4> gradient(const ScalarField& u) {
    Spectrum s = forward(u);
    return {inverse(differentiate(s, 0)), inverse(differentiate(s, 1)),
            inverse(differentiate(s, 2)), inverse(differentiate(s, 3))};
}

ScalarField solve_bilaplacian_meanzero(const ScalarField& rhs) {
    double m = mean(rhs);
    if (std::abs(m) >= 1e-10) {
        std::ostringstream os;
        os << "solve_bilaplacian_meanzero: incompatible right-hand side, mean(rhs) = " << m;
        throw std::invalid_argument(os.str());
    }
    Spectrum s = forward(rhs);
    for_each_mode(rhs.spec, [&](std::size_t i, const Index4& k) {
        double q = ksq(k);
        s.coeffs[i] = (q == 0.0) ? std::complex<double>(0.0) : s.coeffs[i] / (q * q);
    });
    return inverse(s);
}

double spectral_inner(const ScalarField& u, const ScalarField& v) {
    require_same_grid(u, v, "spectral_inner");
    Spectrum a = forward(u), b = forward(v);
    int n = u.spec.n, h = n / 2 + 1;
    long double sum = 0;
    for (std::size_t i = 0; i < a.coeffs.size(); ++i) {
        int w = hermitian_weight(int(i % h), n);
        sum += w * (std::conj(a.coeffs[i]) * b.coeffs[i]).real();
    }
    double nn = double(u.spec.size());
    return double(sum / (nn * nn));
}

double tail_fraction(const ScalarField& u) {
    Spectrum a = forward(u);
    int n = u.spec.n, h = n / 2 + 1;
    long double total = 0, tail = 0;
    for_each_mode(u.spec, [&](std::size_t i, const Index4& k) {
        if (i == 0) return;  // the mean carries no resolution information
        double e = hermitian_weight(int(i % h), n) * std::norm(a.coeffs[i]);
        total += e;
        int kinf = std::max(std::max(std::abs(k[0]), std::abs(k[1])), std::max(std::abs(k[2]), k[3]));
        if (3 * kinf > n) tail += e;
    });
    return total > 0 ? double(tail / total) : 0.0;
}

namespace {
// Periodic cardinal function of the even-N trigonometric interpolant.
double cardinal(double t, int n) {
    t = std::remainder(t, kTwoPi);
    if (std::abs(t) < 1e-14) return 1.0;
    return std::sin(0.5 * n * t) / (n * std::tan(0.5 * t));
}
}  // namespace

double interpolate(const ScalarField& u, const Point4& x) {
    int n = u.spec.n;
    double h = u.spec.spacing();
    std::array<std::vector<double>, 4> w;
    for (int a = 0; a < 4; ++a) {
        w[a].resize(n);
        for (int j = 0; j < n; ++j) w[a][j] = cardinal(x[a] - j * h, n);
    }
    long double s0 = 0;
    std::size_t idx = 0;
    for (int a = 0; a < n; ++a) {
        long double s1 = 0;
        for (int b = 0; b < n; ++b) {
            long double s2 = 0;
            for (int c = 0; c < n; ++c) {
                long double s3 = 0;
                for (int d = 0; d < n; ++d, ++idx) s3 += u.values[idx] * w[3][d];
                s2 += s3 * w[2][c];
            }
            s1 += s2 * w[1][b];
        }
        s0 += s1 * w[0][a];
    }
    return double(s0);
}

std::vector<double> interpolate(const ScalarField& u, const std::vector<Point4>& xs) {
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = interpolate(u, xs[i]);
    return out;
}

ShellSpectrum shell_spectrum(const ScalarField& u, const Point4& center) {
    Spectrum s = forward(u);
    int n = u.spec.n, h = n / 2 + 1;
    ShellSpectrum out;
    out.shells.assign(4 * (n / 2) * (n / 2) + 1, 0.0);
    double scale = 1.0 / double(u.spec.size());
    for_each_mode(u.spec, [&](std::size_t i, const Index4& k) {
        double phase = k[0] * center[0] + k[1] * center[1] + k[2] * center[2] + k[3] * center[3];
        double re = (s.coeffs[i] * std::polar(1.0, phase)).real();
        out.shells[std::size_t(ksq(k))] += hermitian_weight(int(i % h), n) * re * scale;
    });
    return out;
}

double ShellSpectrum::spherical_mean(double r) const {
    // mean of exp(i k.x) over the 3-sphere of radius r is 2 J_1(|k| r)/(|k| r)
    double s = shells.empty() ? 0.0 : shells[0];
    for (std::size_t m = 1; m < shells.size(); ++m) {
        if (shells[m] == 0.0) continue;
        double kr = std::sqrt(double(m)) * r;
        double f = kr < 1e-8 ? 1.0 - kr * kr / 8.0 : 2.0 * std::cyl_bessel_j(1.0, kr) / kr;
        s += shells[m] * f;
    }
    return s;
}

ScalarField random_bandlimited(GridSpec spec, int kmax, unsigned long long seed, bool zero_mean) {
    if (kmax >= spec.n / 2) kmax = spec.n / 2 - 1;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Spectrum s{spec, std::vector<std::complex<double>>(spec.spectral_size(), 0.0)};
    for_each_mode(spec, [&](std::size_t i, const Index4& k) {
        double re = gauss(rng), im = gauss(rng);
        bool inside = std::abs(k[0]) <= kmax && std::abs(k[1]) <= kmax && std::abs(k[2]) <= kmax &&
                      k[3] <= kmax;
        if (inside) s.coeffs[i] = {re, im};
    });
    if (zero_mean) s.coeffs[0] = 0.0;
    ScalarField u = inverse(s);
    double rms = std::sqrt(inner(u, u));
    if (rms > 0) u *= 1.0 / rms;
    return u;
}

}  // namespace qcurv
