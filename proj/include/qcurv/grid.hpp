#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace qcurv {

using Point4 = std::array<double, 4>;
using Index4 = std::array<int, 4>;

// Periodic N^4 grid on [0,2pi)^4; all integrals are divided by (2pi)^4.
struct GridSpec {
    int n = 16;

    explicit GridSpec(int n_per_axis = 16);
    std::size_t size() const { return std::size_t(n) * n * n * n; }
    std::size_t spectral_size() const { return std::size_t(n) * n * n * (n / 2 + 1); }
    double spacing() const;
    static constexpr double domain_length() { return 6.283185307179586476925286766559; }
    Point4 point(std::size_t idx) const;
    Index4 unflatten(std::size_t idx) const;
    std::size_t flatten(const Index4& j) const;
    bool operator==(const GridSpec& o) const { return n == o.n; }
};

struct ScalarField {
    GridSpec spec;
    std::vector<double> values;

    ScalarField() = default;
    explicit ScalarField(GridSpec s, double fill = 0.0) : spec(s), values(s.size(), fill) {}
    ScalarField(GridSpec s, std::vector<double> v);

    std::size_t size() const { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }

    ScalarField& operator+=(const ScalarField& o);
    ScalarField& operator-=(const ScalarField& o);
    ScalarField& operator*=(double a);
    ScalarField& axpy(double a, const ScalarField& x);  // this += a*x
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double a, ScalarField b);

void require_same_grid(const ScalarField& a, const ScalarField& b, const char* where);

double mean(const ScalarField& u);
double inner(const ScalarField& u, const ScalarField& v);  // mean(u*v)
double max_abs(const ScalarField& u);
double max_value(const ScalarField& u);
double min_value(const ScalarField& u);
ScalarField pointwise(const ScalarField& u, const std::function<double(double)>& fn);
ScalarField product(const ScalarField& u, const ScalarField& v);

// Distance on the torus between two points of [0,2pi)^4.
double periodic_distance(const Point4& x, const Point4& c);

// Throws std::domain_error naming the offending grid index.
ScalarField sample(const std::function<double(const Point4&)>& fn, GridSpec spec);

// Signed integer frequency for FFT index i; the Nyquist index maps to +n/2.
inline int frequency(int i, int n) { return i <= n / 2 ? i : i - n; }

// Half-complex spectrum as produced by a real-to-complex 4-D transform.
struct Spectrum {
    GridSpec spec;
    std::vector<std::complex<double>> coeffs;
};

Spectrum forward(const ScalarField& u);
ScalarField inverse(const Spectrum& s);

// Calls fn(flat_index, k) for every stored half-spectrum entry.
void for_each_mode(const GridSpec& spec, const std::function<void(std::size_t, const Index4&)>& fn);
// Multiplicity of a stored half-spectrum entry in the full spectrum (1 or 2).
int hermitian_weight(int k3_index, int n);

struct FourierMultiplier {
    GridSpec spec;
    std::vector<double> symbol;  // on the stored half spectrum
    double zero_mode = 0.0;

    static FourierMultiplier from_symbol(GridSpec spec, const std::function<double(const Index4&)>& m);
    static FourierMultiplier laplacian(GridSpec spec);
    static FourierMultiplier bilaplacian(GridSpec spec);
};

ScalarField apply_multiplier(const ScalarField& u, const FourierMultiplier& m);
ScalarField laplacian(const ScalarField& u);
ScalarField bilaplacian(const ScalarField& u);
// Spectral first derivative; the Nyquist mode is dropped so d/dx is exactly skew.
ScalarField partial(const ScalarField& u, int axis);
std::array<ScalarField, 4> gradient(const ScalarField& u);

// Mean-zero solution of Delta^2 u = rhs.  Throws std::invalid_argument when
// |mean(rhs)| >= 1e-10.
ScalarField solve_bilaplacian_meanzero(const ScalarField& rhs);

// Sum over the full spectrum of conj(u_k) v_k / N^8, which equals mean(u v).
double spectral_inner(const ScalarField& u, const ScalarField& v);

// Fraction of spectral energy carried by modes with max|k_i| > n/3.
double tail_fraction(const ScalarField& u);

// Evaluates the trigonometric interpolant at an arbitrary point.
double interpolate(const ScalarField& u, const Point4& x);
std::vector<double> interpolate(const ScalarField& u, const std::vector<Point4>& xs);

// Shell sums S_m = sum over |k|^2 = m of the (centred) Fourier coefficients of
// the interpolant; spherical means follow from a Bessel series.
struct ShellSpectrum {
    std::vector<double> shells;  // index m = |k|^2
    double spherical_mean(double r) const;
};
ShellSpectrum shell_spectrum(const ScalarField& u, const Point4& center);

// Band-limited random field: Gaussian coefficients on modes with |k|_inf <= kmax.
ScalarField random_bandlimited(GridSpec spec, int kmax, unsigned long long seed, bool zero_mean = false);

}  // namespace qcurv
