#pragma once

#include "qcurv/blowup.hpp"
#include "qcurv/energy.hpp"
#include "qcurv/minimizer.hpp"
#include "qcurv/mountainpass.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace qcurv {

// Every violated invariant, one per line.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::vector<std::string>& problems);
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

// key = value lines; "[section]" headers prefix later keys with "section.";
// '#' starts a comment.
std::map<std::string, std::string> parse_key_values(const std::string& text);

struct ExperimentConfig {
    int grid_n = 16;
    double q0 = -1.0;
    std::array<double, 4> alphas{0.2, 0.2, 0.2, 0.2};
    std::string family = "builtin";  // or "constant"
    double f_constant = -1.0;

    double A0 = 1.1;
    std::string smoothing = "quintic";
    double lambda0 = 0.28;  // comparison window bound used by choose_L
    double K = 40.0 * 9.869604401089358;
    int appendix_N = 5;
    double remainder_amplitude = 1.0;

    SolveOptions solve;
    EigenOptions eigen;

    std::vector<double> branch_lambdas{0.04, 0.08, 0.12, 0.16, 0.20, 0.24};
    std::vector<double> ccurve_lambdas{0.1, 0.2};
    std::vector<double> appendix_lambdas{1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2};
    std::vector<double> comparison_lambdas{1e-8, 1e-6, 1e-5, 1e-4, 1e-3};

    int mp_nodes = 33;
    double mp_bump_radius = 1.2;
    double mp_dt = 0.3;
    double mp_tol = 1e-5;
    int mp_max_iter = 400;
    double saddle_tol = 1e-7;

    BlowupOptions blowup;
    double blowup_fixture_lambda = 0.01;
    double blowup_fixture_r = 0.5;
    int blowup_fixture_n = 32;

    std::string out = "out";
    unsigned long long seed = 17;
    int jobs = 1;

    PrescribedCurvature curvature(double lambda = 0.0) const;
    ScalarField f_field(double lambda, GridSpec spec) const;
    // Throws ConfigError listing all problems.
    void validate() const;
    // Echo as key = value lines, in a fixed order.
    std::string echo() const;
};

// Unknown keys and malformed values are reported together.
ExperimentConfig config_from_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

std::vector<double> parse_list(const std::string& s);
std::vector<double> linspace(double a, double b, int count);
std::vector<double> geomspace(double a, double b, int count);

}  // namespace qcurv
