#pragma once

#include "qcurv/energy.hpp"
#include "qcurv/grid.hpp"

#include <string>
#include <vector>

namespace qcurv {

// w(r) = -log(1 + r^2/a), a = 4 sqrt 6, the entire solution of Delta^2 w = e^{4w} in R^4.
struct BubbleProfile {
    static constexpr double a = 9.797958971132712;  // 4 sqrt 6
    static double w(double r);
    static double d1(double r);
    static double d2(double r);
    static double d3(double r);
    static double d4(double r);
    // Delta w and Delta^2 w from the composition in q = 1 + r^2/a, exact at r = 0.
    static double laplacian(double r);
    static double bilaplacian(double r);
    // Delta^2 w from the radial derivatives; loses digits as r -> 0.
    static double bilaplacian_from_derivatives(double r);
};

double bubble_residual(const std::vector<double>& r_values);

struct BubbleVolume {
    double quadrature = 0.0;  // 2 pi^2 int_0^R e^{4w} r^3 dr
    double tail = 0.0;        // closed form beyond R
    double total = 0.0;
    double captured_fraction = 0.0;
    double cutoff = 0.0;
};
BubbleVolume bubble_volume(double cutoff = 100.0);

struct Peak {
    std::size_t index = 0;
    Point4 location{};
    double value = 0.0;
    bool blowup = false;  // value - mean(u) above the configured threshold
};

// Local maxima of u on K = {f_lambda >= 0}, sorted by decreasing value.  Ties
// are broken by grid index so a constant field yields one peak.
std::vector<Peak> detect_peaks(const ScalarField& u, const PrescribedCurvature& pc, double threshold = 1.0);

struct RadialProfile {
    std::vector<double> radius;
    std::vector<double> value;     // rescaled field, mean over probe directions
    std::vector<double> bubble;    // reference profile
};

struct RescaleA {
    double r = 0.0;
    double scale_relation = 0.0;   // r^4 lambda e^{4 u(x_n)}, 1/2 by construction
    double ratio_to_sqrt_lambda = 0.0;
    double profile_error = 0.0;    // sup |u_hat - w| over the probes
    double fitted_error = 0.0;     // after one additive constant
    double fitted_constant = 0.0;
    RadialProfile profile;
};

// r = (2 lambda e^{4u(x_n)})^{-1/4}; u_hat(y) = u(x_n + r y) - u(x_n) probed by
// spectral interpolation on |y| <= radius.  Throws std::domain_error when r
// is below two grid spacings or above 2 pi/8.
RescaleA rescale_case_a(const ScalarField& u, double lambda, const Point4& x_n, double radius = 2.0,
                        int samples = 21);

struct RescaleB {
    double r = 0.0;                // (lambda^2/(c alpha_4^2))^{1/4}
    double value_at_peak = 0.0;    // u_hat(x_n / r)
    RadialProfile profile;         // u_hat along the probe directions from the origin
    std::vector<double> limit_curvature;  // h_inf at the probe radii along the axis of alpha_4
};

RescaleB rescale_case_b(const ScalarField& u, const PrescribedCurvature& pc, double c, const Point4& x_n,
                        double radius = 2.0, int samples = 21);

// h_inf(x) = 1 + D^2 f0(0)[x,x]/2 = 1 - sum alpha_i x_i^2.
double limit_curvature(const PrescribedCurvature& pc, const Point4& x);

struct ConcentrationMass {
    double mass_abs = 0.0;          // int_B |f| e^{4u} dx, chart measure
    double mass_pos = 0.0;          // int_B f_+ e^{4u} dx
    double mass_abs_normalised = 0.0;
    double weight = 0.0;            // mass_abs/(8 pi^2)
    bool above_threshold = false;   // mass_abs >= 4 pi^2
    bool weight_in_window = false;  // 1 <= weight <= 3/2
};

// Midpoint sum h^4 over grid points within the periodic ball.
ConcentrationMass concentration_mass(const ScalarField& u, const ScalarField& f, const Point4& center, double radius);

enum class BlowupCase { a, b };

struct SyntheticBlowup {
    ScalarField field;
    double r = 0.0;
    Point4 center{};
};

// Bubble implanted at the origin (the maximum of f0): case a uses
// w(x/r) - log r + log(1/(2 lambda))/4, case b uses the case-b scale r with
// w(x/r) - (3/4) log lambda - log c.  Matched smoothly to a constant beyond
// 2.5 r.  Requires 2h <= r and 2.5 r < 0.9 pi.
SyntheticBlowup synthetic_blowup(double lambda, BlowupCase kind, const PrescribedCurvature& pc, GridSpec spec,
                                 double r_or_c);

// Theta2 in K in Theta1 with semi-axes sqrt(2 lambda/(3 alpha_i)) and sqrt(2 lambda/alpha_i),
// tested on the grid points.
struct RegionCheck {
    std::size_t in_K = 0;
    std::size_t theta2_outside_K = 0;
    std::size_t K_outside_theta1 = 0;
    bool ok = false;
};
RegionCheck ellipsoid_check(const PrescribedCurvature& pc, GridSpec spec);

struct PeakReport {
    double lambda = 0.0;
    Peak peak;
    std::string case_tag;
    double r = 0.0;
    double profile_error = 0.0;
    ConcentrationMass mass;
    std::string diagnosis;
};

struct BlowupOptions {
    double peak_threshold = 1.0;
    double case_a_ratio = 0.5;  // r/sqrt(lambda) below this is tagged case a
    double mass_radius_factor = 4.0;
    double c_case_b = 1.0;
    double mean_floor = -20.0;
};

std::vector<PeakReport> analyze_blowup(const ScalarField& u, const PrescribedCurvature& pc,
                                       const BlowupOptions& opts = {});

void write_peaks_csv(const std::string& path, const std::vector<PeakReport>& rows);
void write_profile_csv(const std::string& path, const RadialProfile& p);

}  // namespace qcurv
