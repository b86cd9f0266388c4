#include "qcurv/radial.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qcurv {

namespace {

using Gauss = boost::math::quadrature::gauss<double, kGaussOrder>;

void add_panel(LineRule& r, double a, double b) {
    const auto& x = Gauss::abscissa();
    const auto& w = Gauss::weights();
    double c = 0.5 * (a + b), h = 0.5 * (b - a);
    for (std::size_t i = 0; i < x.size(); ++i) {
        // kGaussOrder is even, so every abscissa is nonzero and comes in a +/- pair
        r.nodes.push_back(c - h * x[i]);
        r.weights.push_back(h * w[i]);
        r.nodes.push_back(c + h * x[i]);
        r.weights.push_back(h * w[i]);
    }
}

}  // namespace

LineRule LineRule::uniform(double a, double b, int panels) {
    if (!(b > a) || panels < 1) throw std::invalid_argument("LineRule::uniform: bad interval");
    LineRule r;
    for (int i = 0; i < panels; ++i) add_panel(r, a + (b - a) * i / panels, a + (b - a) * (i + 1) / panels);
    return r;
}

LineRule LineRule::logarithmic(double a, double b, int panels) {
    if (!(a > 0 && b > a) || panels < 1) throw std::invalid_argument("LineRule::logarithmic: bad interval");
    LineRule r;
    double la = std::log(a), lb = std::log(b);
    for (int i = 0; i < panels; ++i)
        add_panel(r, std::exp(la + (lb - la) * i / panels), std::exp(la + (lb - la) * (i + 1) / panels));
    return r;
}

LineRule LineRule::graded_to_zero(double b, int panels, double ratio) {
    if (!(b > 0) || panels < 1 || !(ratio > 0 && ratio < 1))
        throw std::invalid_argument("LineRule::graded_to_zero: bad arguments");
    LineRule r;
    double hi = b;
    for (int i = 0; i < panels; ++i) {
        double lo = hi * ratio;
        add_panel(r, lo, hi);
        hi = lo;
    }
    add_panel(r, 0.0, hi);
    return r;
}

LineRule& LineRule::append(const LineRule& o) {
    nodes.insert(nodes.end(), o.nodes.begin(), o.nodes.end());
    weights.insert(weights.end(), o.weights.begin(), o.weights.end());
    return *this;
}

double LineRule::integrate(const std::function<double(double)>& fn) const {
    long double s = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * fn(nodes[i]);
    return double(s);
}

RadialGrid RadialGrid::from_rule(const LineRule& rule) {
    RadialGrid g;
    g.nodes = rule.nodes;
    g.weights.resize(rule.nodes.size());
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        double r = rule.nodes[i];
        g.weights[i] = kSphereArea * r * r * r * rule.weights[i];
    }
    return g;
}

RadialGrid RadialGrid::uniform(double a, double b, int panels) { return from_rule(LineRule::uniform(a, b, panels)); }

RadialGrid RadialGrid::logarithmic(double a, double b, int panels) {
    return from_rule(LineRule::logarithmic(a, b, panels));
}

RadialGrid RadialGrid::graded_to_zero(double b, int panels, double ratio) {
    return from_rule(LineRule::graded_to_zero(b, panels, ratio));
}

double radial_quadrature(const std::function<double(double)>& profile, const RadialGrid& grid) {
    long double s = 0;
    for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
        double v = profile(grid.nodes[i]);
        if (!std::isfinite(v)) {
            std::ostringstream os;
            os << "radial_quadrature: non-finite profile value at r = " << grid.nodes[i];
            throw std::domain_error(os.str());
        }
        s += grid.weights[i] * v;
    }
    return double(s);
}

}  // namespace qcurv
