#include "qcurv/blowup.hpp"

#include "qcurv/radial.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace qcurv {

namespace {

constexpr double kA = BubbleProfile::a;
constexpr double kGeometric = 16.0 * kPi * kPi * kPi * kPi;

double q_of(double r) { return 1.0 + r * r / kA; }

std::vector<Point4> probe_directions() {
    std::vector<Point4> d;
    for (int i = 0; i < 4; ++i)
        for (double s : {1.0, -1.0}) {
            Point4 e{0, 0, 0, 0};
            e[i] = s;
            d.push_back(e);
        }
    for (int m = 0; m < 8; ++m)
        d.push_back({0.5, m & 1 ? -0.5 : 0.5, m & 2 ? -0.5 : 0.5, m & 4 ? -0.5 : 0.5});
    return d;
}

double s5(double x) {
    if (x <= 0) return 0.0;
    if (x >= 1) return 1.0;
    return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}

Point4 wrap(Point4 x) {
    const double T = GridSpec::domain_length();
    for (double& v : x) {
        v = std::fmod(v, T);
        if (v < 0) v += T;
    }
    return x;
}

void require_scale(double r, GridSpec spec, const char* where) {
    double h = spec.spacing();
    if (!(r >= 2.0 * h) || !(r <= GridSpec::domain_length() / 8.0)) {
        std::ostringstream os;
        os << where << ": scale r = " << r << " outside [2h, 2pi/8] = [" << 2.0 * h << ", "
           << GridSpec::domain_length() / 8.0 << "]; the rescaling is not resolved on this grid";
        throw std::domain_error(os.str());
    }
}

}  // namespace

double BubbleProfile::w(double r) { return -std::log1p(r * r / kA); }
double BubbleProfile::d1(double r) { return -2.0 * r / (kA * q_of(r)); }
double BubbleProfile::d2(double r) {
    double q = q_of(r);
    return -2.0 / (kA * q) + 4.0 * r * r / (kA * kA * q * q);
}
double BubbleProfile::d3(double r) {
    double q = q_of(r);
    return 12.0 * r / (kA * kA * q * q) - 16.0 * r * r * r / (kA * kA * kA * q * q * q);
}
double BubbleProfile::d4(double r) {
    double q = q_of(r), r2 = r * r;
    return 12.0 / (kA * kA * q * q) - 96.0 * r2 / (kA * kA * kA * q * q * q) +
           96.0 * r2 * r2 / (kA * kA * kA * kA * q * q * q * q);
}

double BubbleProfile::laplacian(double r) {
    double q = q_of(r);
    return -4.0 / kA * (1.0 / q + 1.0 / (q * q));
}

double BubbleProfile::bilaplacian(double r) {
    // Delta G(q) = 4 (q-1)/a G'' + 8/a G' with G = Delta w
    double q = q_of(r), q2 = q * q, q3 = q2 * q, q4 = q2 * q2;
    double g1 = 4.0 / kA * (1.0 / q2 + 2.0 / q3);
    double g2 = 4.0 / kA * (-2.0 / q3 - 6.0 / q4);
    return 4.0 * (r * r / kA) / kA * g2 + 8.0 / kA * g1;
}

double BubbleProfile::bilaplacian_from_derivatives(double r) {
    return d4(r) + 6.0 * d3(r) / r + 3.0 * d2(r) / (r * r) - 3.0 * d1(r) / (r * r * r);
}

double bubble_residual(const std::vector<double>& r_values) {
    double m = 0;
    for (double r : r_values) {
        if (!(r >= 0)) throw std::invalid_argument("bubble_residual: negative radius");
        m = std::max(m, std::abs(BubbleProfile::bilaplacian(r) - std::exp(4.0 * BubbleProfile::w(r))));
    }
    return m;
}

BubbleVolume bubble_volume(double cutoff) {
    if (!(cutoff > 0)) throw std::invalid_argument("bubble_volume: cutoff must be positive");
    RadialGrid g = RadialGrid::from_rule(LineRule::uniform(0.0, std::min(cutoff, 4.0), 8));
    if (cutoff > 4.0) {
        RadialGrid outer = RadialGrid::logarithmic(4.0, cutoff, 4 * int(std::ceil(std::log2(cutoff / 4.0))));
        g.nodes.insert(g.nodes.end(), outer.nodes.begin(), outer.nodes.end());
        g.weights.insert(g.weights.end(), outer.weights.begin(), outer.weights.end());
    }
    BubbleVolume v;
    v.cutoff = cutoff;
    v.quadrature = radial_quadrature([](double r) { return std::pow(q_of(r), -4.0); }, g);
    // with t = r^2/a: 2 pi^2 (a^2/2) int_T^inf t/(1+t)^4 dt
    double T1 = 1.0 + cutoff * cutoff / kA;
    v.tail = kPi * kPi * kA * kA * (0.5 / (T1 * T1) - 1.0 / (3.0 * T1 * T1 * T1));
    v.total = v.quadrature + v.tail;
    v.captured_fraction = v.quadrature / v.total;
    return v;
}

std::vector<Peak> detect_peaks(const ScalarField& u, const PrescribedCurvature& pc, double threshold) {
    const GridSpec& spec = u.spec;
    const int n = spec.n;
    ScalarField f = f_lambda_field(pc, spec);
    double ubar = mean(u);
    std::vector<Peak> peaks;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (f[i] < 0) continue;
        Index4 j = spec.unflatten(i);
        bool is_max = true;
        for (int m = 0; m < 81 && is_max; ++m) {
            if (m == 40) continue;
            Index4 k = j;
            int code = m;
            for (int a = 0; a < 4; ++a) {
                k[a] = (k[a] + (code % 3) - 1 + n) % n;
                code /= 3;
            }
            std::size_t nb = spec.flatten(k);
            if (u[nb] > u[i] || (u[nb] == u[i] && nb < i)) is_max = false;
        }
        if (is_max) peaks.push_back({i, spec.point(i), u[i], u[i] - ubar > threshold});
    }
    std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.value > b.value; });
    return peaks;
}

RescaleA rescale_case_a(const ScalarField& u, double lambda, const Point4& x_n, double radius, int samples) {
    if (!(lambda > 0)) throw std::invalid_argument("rescale_case_a: lambda must be positive");
    if (samples < 2) throw std::invalid_argument("rescale_case_a: need at least two samples");
    double un = interpolate(u, x_n);
    RescaleA out;
    out.r = std::pow(2.0 * lambda * std::exp(4.0 * un), -0.25);
    require_scale(out.r, u.spec, "rescale_case_a");
    out.scale_relation = std::pow(out.r, 4) * lambda * std::exp(4.0 * un);
    out.ratio_to_sqrt_lambda = out.r / std::sqrt(lambda);
    auto dirs = probe_directions();
    std::vector<double> diffs;
    for (int s = 0; s < samples; ++s) {
        double rho = radius * s / (samples - 1);
        double acc = 0;
        for (const auto& e : dirs) {
            Point4 x{x_n[0] + out.r * rho * e[0], x_n[1] + out.r * rho * e[1], x_n[2] + out.r * rho * e[2],
                     x_n[3] + out.r * rho * e[3]};
            double uh = interpolate(u, wrap(x)) - un;
            diffs.push_back(uh - BubbleProfile::w(rho));
            acc += uh;
        }
        out.profile.radius.push_back(rho);
        out.profile.value.push_back(acc / double(dirs.size()));
        out.profile.bubble.push_back(BubbleProfile::w(rho));
    }
    auto [lo, hi] = std::minmax_element(diffs.begin(), diffs.end());
    out.profile_error = std::max(std::abs(*lo), std::abs(*hi));
    out.fitted_constant = 0.5 * (*lo + *hi);
    out.fitted_error = 0.5 * (*hi - *lo);
    return out;
}

double limit_curvature(const PrescribedCurvature& pc, const Point4& x) {
    double s = 1.0;
    for (int i = 0; i < 4; ++i) s -= pc.alphas[i] * x[i] * x[i];
    return s;
}

RescaleB rescale_case_b(const ScalarField& u, const PrescribedCurvature& pc, double c, const Point4& x_n,
                        double radius, int samples) {
    pc.validate();
    if (!(c > 0)) throw std::invalid_argument("rescale_case_b: c must be positive");
    if (!(pc.lambda > 0)) throw std::invalid_argument("rescale_case_b: lambda must be positive");
    double a4 = pc.alpha_max();
    RescaleB out;
    out.r = std::pow(pc.lambda * pc.lambda / (c * a4 * a4), 0.25);
    require_scale(out.r, u.spec, "rescale_case_b");
    double shift = 0.75 * std::log(pc.lambda) + std::log(c);
    out.value_at_peak = interpolate(u, x_n) + shift;
    auto dirs = probe_directions();
    for (int s = 0; s < samples; ++s) {
        double rho = radius * s / (samples - 1);
        double acc = 0;
        for (const auto& e : dirs)
            acc += interpolate(u, wrap({out.r * rho * e[0], out.r * rho * e[1], out.r * rho * e[2], out.r * rho * e[3]}));
        out.profile.radius.push_back(rho);
        out.profile.value.push_back(acc / double(dirs.size()) + shift);
        out.profile.bubble.push_back(BubbleProfile::w(rho));
        out.limit_curvature.push_back(limit_curvature(pc, {0, 0, 0, rho}));
    }
    return out;
}

ConcentrationMass concentration_mass(const ScalarField& u, const ScalarField& f, const Point4& center, double radius) {
    require_same_grid(u, f, "concentration_mass");
    if (!(radius > 0 && radius < kPi)) throw std::invalid_argument("concentration_mass: radius outside (0, pi)");
    ScalarField e = exp4(u);
    double h = u.spec.spacing(), cell = h * h * h * h;
    ConcentrationMass m;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (periodic_distance(u.spec.point(i), center) > radius) continue;
        m.mass_abs += std::abs(f[i]) * e[i];
        m.mass_pos += std::max(f[i], 0.0) * e[i];
    }
    m.mass_abs *= cell;
    m.mass_pos *= cell;
    m.mass_abs_normalised = m.mass_abs / kGeometric;
    m.weight = m.mass_abs / (8.0 * kPi * kPi);
    m.above_threshold = m.mass_abs >= 4.0 * kPi * kPi;
    m.weight_in_window = m.weight >= 1.0 && m.weight <= 1.5;
    return m;
}

SyntheticBlowup synthetic_blowup(double lambda, BlowupCase kind, const PrescribedCurvature& pc, GridSpec spec,
                                 double r_or_c) {
    pc.validate();
    if (!(lambda > 0 && lambda < 0.25)) throw std::invalid_argument("synthetic_blowup: lambda outside (0, 1/4)");
    if (!(r_or_c > 0)) throw std::invalid_argument("synthetic_blowup: scale parameter must be positive");
    SyntheticBlowup out;
    double level;
    if (kind == BlowupCase::a) {
        out.r = r_or_c;
        level = -std::log(out.r) + 0.25 * std::log(1.0 / (2.0 * lambda));
    } else {
        double a4 = pc.alpha_max();
        out.r = std::pow(lambda * lambda / (r_or_c * a4 * a4), 0.25);
        level = -0.75 * std::log(lambda) - std::log(r_or_c);
    }
    double h = spec.spacing(), r1 = 2.5 * out.r, r2 = 0.9 * kPi;
    if (out.r < 2.0 * h || r1 >= r2) {
        std::ostringstream os;
        os << "synthetic_blowup: bubble scale " << out.r << " not resolvable (need " << 2.0 * h << " <= r < "
           << r2 / 2.5 << ")";
        throw std::domain_error(os.str());
    }
    double far = BubbleProfile::w(r2 / out.r) + level;
    out.field = sample(
        [&](const Point4& x) {
            double rho = periodic_distance(x, out.center);
            double core = BubbleProfile::w(rho / out.r) + level;
            double s = s5((rho - r1) / (r2 - r1));
            return (1.0 - s) * core + s * far;
        },
        spec);
    return out;
}

RegionCheck ellipsoid_check(const PrescribedCurvature& pc, GridSpec spec) {
    pc.validate();
    ScalarField f = f_lambda_field(pc, spec);
    RegionCheck rc;
    for (std::size_t i = 0; i < f.size(); ++i) {
        Point4 x = spec.point(i);
        Point4 y;
        for (int k = 0; k < 4; ++k) y[k] = x[k] > kPi ? x[k] - 2.0 * kPi : x[k];
        double e1 = 0, e2 = 0;
        for (int k = 0; k < 4; ++k) {
            e1 += y[k] * y[k] * pc.alphas[k] / (2.0 * pc.lambda);
            e2 += y[k] * y[k] * 3.0 * pc.alphas[k] / (2.0 * pc.lambda);
        }
        bool inK = f[i] >= 0;
        rc.in_K += inK;
        if (e2 <= 1.0 && !inK) ++rc.theta2_outside_K;
        if (inK && e1 > 1.0) ++rc.K_outside_theta1;
    }
    rc.ok = rc.theta2_outside_K == 0 && rc.K_outside_theta1 == 0;
    return rc;
}

std::vector<PeakReport> analyze_blowup(const ScalarField& u, const PrescribedCurvature& pc, const BlowupOptions& opts) {
    pc.validate();
    ScalarField f = f_lambda_field(pc, u.spec);
    std::vector<PeakReport> rows;
    bool mean_drop = mean(u) < opts.mean_floor;
    for (const Peak& p : detect_peaks(u, pc, opts.peak_threshold)) {
        PeakReport row;
        row.lambda = pc.lambda;
        row.peak = p;
        if (mean_drop) row.diagnosis = "mean drop below floor; ";
        if (!p.blowup) {
            row.case_tag = "none";
            row.diagnosis += "no concentration";
            rows.push_back(row);
            continue;
        }
        double ra = pc.lambda > 0 ? std::pow(2.0 * pc.lambda * std::exp(4.0 * p.value), -0.25) : 0.0;
        bool case_a = pc.lambda > 0 && ra / std::sqrt(pc.lambda) < opts.case_a_ratio;
        row.case_tag = case_a ? "a" : "b";
        try {
            if (case_a) {
                RescaleA ra_rep = rescale_case_a(u, pc.lambda, p.location);
                row.r = ra_rep.r;
                row.profile_error = ra_rep.fitted_error;
            } else {
                RescaleB rb = rescale_case_b(u, pc, opts.c_case_b, p.location);
                row.r = rb.r;
                row.profile_error = NAN;
            }
            double radius = std::min(opts.mass_radius_factor * row.r, 0.5 * kPi);
            row.mass = concentration_mass(u, f, p.location, radius);
            row.diagnosis += "rescaled";
        } catch (const std::domain_error& e) {
            row.diagnosis += e.what();
        }
        rows.push_back(row);
    }
    return rows;
}

void write_peaks_csv(const std::string& path, const std::vector<PeakReport>& rows) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << std::setprecision(17);
    os << "lambda,x0,x1,x2,x3,u,case,r,profile_error,mass_abs,mass_pos,weight,diagnosis\n";
    for (const auto& r : rows) {
        os << r.lambda;
        for (double x : r.peak.location) os << ',' << x;
        os << ',' << r.peak.value << ',' << r.case_tag << ',' << r.r << ',' << r.profile_error << ','
           << r.mass.mass_abs << ',' << r.mass.mass_pos << ',' << r.mass.weight << ",\"" << r.diagnosis << "\"\n";
    }
}

void write_profile_csv(const std::string& path, const RadialProfile& p) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << std::setprecision(17) << "r,value\n";
    for (std::size_t i = 0; i < p.radius.size(); ++i) os << p.radius[i] << ',' << p.value[i] << '\n';
}

}  // namespace qcurv
