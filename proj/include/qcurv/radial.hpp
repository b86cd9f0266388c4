#pragma once

#include <functional>
#include <vector>

namespace qcurv {

// Composite Gauss-Legendre rule on a 1-D interval (plain dr weights).
struct LineRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    static LineRule uniform(double a, double b, int panels);
    // Panel edges equally spaced in log r; requires 0 < a < b.
    static LineRule logarithmic(double a, double b, int panels);
    // Geometrically refined towards a = 0: edges b*ratio^i down to b*ratio^panels.
    static LineRule graded_to_zero(double b, int panels, double ratio = 0.5);
    LineRule& append(const LineRule& o);
    double integrate(const std::function<double(double)>& fn) const;
};

constexpr int kGaussOrder = 20;

// Radial quadrature in R^4: weights carry the factor 2 pi^2 r^3.
struct RadialGrid {
    std::vector<double> nodes;
    std::vector<double> weights;

    static RadialGrid from_rule(const LineRule& rule);
    static RadialGrid uniform(double a, double b, int panels);
    static RadialGrid logarithmic(double a, double b, int panels);
    static RadialGrid graded_to_zero(double b, int panels, double ratio = 0.5);
};

// 2 pi^2 * integral of profile(r) r^3 dr over the grid's support.
double radial_quadrature(const std::function<double(double)>& profile, const RadialGrid& grid);

constexpr double kPi = 3.14159265358979323846264338327950288;
constexpr double kSphereArea = 2.0 * kPi * kPi;  // |S^3|

}  // namespace qcurv
