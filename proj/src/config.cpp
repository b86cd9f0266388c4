#include "qcurv/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

namespace qcurv {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) out += s + "\n";
    return out;
}

std::string list_text(const std::vector<double>& v) {
    std::ostringstream os;
    os << std::setprecision(17);
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    return os.str();
}

double to_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(key + ": trailing characters in '" + v + "'");
    return x;
}

long long to_int(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(key + ": not an integer: '" + v + "'");
    return x;
}

}  // namespace

ConfigError::ConfigError(const std::vector<std::string>& problems)
    : std::runtime_error("configuration invalid:\n" + join(problems)), problems_(problems) {}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::vector<std::string> problems;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                problems.push_back("line " + std::to_string(lineno) + ": unterminated section header");
                continue;
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            problems.push_back("line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (!section.empty()) key = section + "." + key;
        if (kv.count(key)) problems.push_back("line " + std::to_string(lineno) + ": duplicate key " + key);
        kv[key] = value;
    }
    if (!problems.empty()) throw ConfigError(problems);
    return kv;
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(to_double("list", item));
    }
    return out;
}

std::vector<double> linspace(double a, double b, int count) {
    if (count < 1) throw std::invalid_argument("linspace: count must be positive");
    if (count == 1) return {a};
    std::vector<double> v(count);
    for (int i = 0; i < count; ++i) v[i] = a + (b - a) * i / (count - 1);
    return v;
}

std::vector<double> geomspace(double a, double b, int count) {
    if (!(a > 0 && b > 0)) throw std::invalid_argument("geomspace: endpoints must be positive");
    auto e = linspace(std::log(a), std::log(b), count);
    for (double& x : e) x = std::exp(x);
    return e;
}

PrescribedCurvature ExperimentConfig::curvature(double lambda) const {
    PrescribedCurvature pc;
    pc.alphas = alphas;
    pc.lambda = lambda;
    return pc;
}

ScalarField ExperimentConfig::f_field(double lambda, GridSpec spec) const {
    if (family == "constant") return ScalarField(spec, f_constant + lambda);
    return f_lambda_field(curvature(lambda), spec);
}

void ExperimentConfig::validate() const {
    std::vector<std::string> p;
    if (grid_n < 8 || grid_n % 2) p.push_back("grid.n must be even and at least 8");
    if (!(q0 < 0)) p.push_back("model.q0 must be negative");
    for (int i = 0; i < 4; ++i)
        if (!(alphas[i] > 0)) p.push_back("model.alphas[" + std::to_string(i) + "] must be positive");
    for (int i = 0; i < 3; ++i)
        if (alphas[i] > alphas[i + 1]) p.push_back("model.alphas must be sorted increasingly");
    if (family != "builtin" && family != "constant") p.push_back("model.family must be builtin or constant");
    if (family == "constant" && !(f_constant < 0)) p.push_back("model.f_constant must be negative");
    if (!(A0 > 1 && A0 < 2)) p.push_back("cutoff.A0 must lie in (1, 2)");
    if (smoothing != "quintic") p.push_back("cutoff.smoothing: only 'quintic' is implemented");
    if (!(lambda0 > 0 && lambda0 < 1)) p.push_back("comparison.lambda0 must lie in (0, 1)");
    if (!(K > 32.0 * 9.869604401089358)) p.push_back("comparison.K must exceed 32 pi^2");
    if (appendix_N < 5) p.push_back("appendix.N must be at least 5");
    auto check_window = [&](const std::vector<double>& v, const char* name) {
        if (v.empty()) p.push_back(std::string(name) + " is empty");
        for (double x : v)
            if (!(x > 0 && x < 0.25)) {
                std::ostringstream os;
                os << name << ": lambda = " << x << " outside (0, 1/4)";
                p.push_back(os.str());
            }
        for (std::size_t i = 1; i < v.size(); ++i)
            if (!(v[i] > v[i - 1])) {
                p.push_back(std::string(name) + " must be strictly increasing");
                break;
            }
    };
    check_window(branch_lambdas, "branch.lambdas");
    check_window(ccurve_lambdas, "mountain.lambdas");
    check_window(appendix_lambdas, "appendix.lambdas");
    check_window(comparison_lambdas, "comparison.lambdas");
    if (!(solve.tol_grad > 0)) p.push_back("solver.tol_grad must be positive");
    if (solve.max_newton < 1) p.push_back("solver.max_newton must be positive");
    if (mp_nodes < 3) p.push_back("mountain.nodes must be at least 3");
    if (!(mp_bump_radius > 0 && mp_bump_radius < 3.14)) p.push_back("mountain.bump_radius must lie in (0, pi)");
    if (!(mp_dt > 0)) p.push_back("mountain.dt must be positive");
    if (jobs < 1) p.push_back("jobs must be at least 1");
    if (blowup_fixture_n < 8 || blowup_fixture_n % 2) p.push_back("blowup.fixture_n must be even and at least 8");
    if (!p.empty()) throw ConfigError(p);
}

std::string ExperimentConfig::echo() const {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "grid.n = " << grid_n << "\n";
    os << "model.q0 = " << q0 << "\n";
    os << "model.alphas = " << list_text({alphas.begin(), alphas.end()}) << "\n";
    os << "model.family = " << family << "\n";
    os << "model.f_constant = " << f_constant << "\n";
    os << "cutoff.A0 = " << A0 << "\n";
    os << "cutoff.smoothing = " << smoothing << "\n";
    os << "comparison.lambda0 = " << lambda0 << "\n";
    os << "comparison.K = " << K << "\n";
    os << "comparison.lambdas = " << list_text(comparison_lambdas) << "\n";
    os << "appendix.N = " << appendix_N << "\n";
    os << "appendix.amplitude = " << remainder_amplitude << "\n";
    os << "appendix.lambdas = " << list_text(appendix_lambdas) << "\n";
    os << "solver.tol_grad = " << solve.tol_grad << "\n";
    os << "solver.max_newton = " << solve.max_newton << "\n";
    os << "solver.linear_tol = " << solve.linear_tol << "\n";
    os << "solver.max_linear = " << solve.max_linear << "\n";
    os << "eigen.block = " << eigen.block << "\n";
    os << "eigen.max_iter = " << eigen.max_iter << "\n";
    os << "eigen.tol = " << eigen.tol << "\n";
    os << "branch.lambdas = " << list_text(branch_lambdas) << "\n";
    os << "mountain.lambdas = " << list_text(ccurve_lambdas) << "\n";
    os << "mountain.nodes = " << mp_nodes << "\n";
    os << "mountain.bump_radius = " << mp_bump_radius << "\n";
    os << "mountain.dt = " << mp_dt << "\n";
    os << "mountain.tol = " << mp_tol << "\n";
    os << "mountain.max_iter = " << mp_max_iter << "\n";
    os << "mountain.saddle_tol = " << saddle_tol << "\n";
    os << "blowup.peak_threshold = " << blowup.peak_threshold << "\n";
    os << "blowup.case_a_ratio = " << blowup.case_a_ratio << "\n";
    os << "blowup.mass_radius_factor = " << blowup.mass_radius_factor << "\n";
    os << "blowup.c = " << blowup.c_case_b << "\n";
    os << "blowup.mean_floor = " << blowup.mean_floor << "\n";
    os << "blowup.fixture_lambda = " << blowup_fixture_lambda << "\n";
    os << "blowup.fixture_r = " << blowup_fixture_r << "\n";
    os << "blowup.fixture_n = " << blowup_fixture_n << "\n";
    os << "output.dir = " << out << "\n";
    os << "seed = " << seed << "\n";
    os << "jobs = " << jobs << "\n";
    return os.str();
}

ExperimentConfig config_from_text(const std::string& text) {
    auto kv = parse_key_values(text);
    ExperimentConfig c;
    std::vector<std::string> problems;
    using Setter = std::function<void(const std::string&, const std::string&)>;
    auto dbl = [](double& t) -> Setter { return [&t](const std::string& k, const std::string& v) { t = to_double(k, v); }; };
    auto integer = [](int& t) -> Setter {
        return [&t](const std::string& k, const std::string& v) { t = int(to_int(k, v)); };
    };
    auto list = [](std::vector<double>& t) -> Setter {
        return [&t](const std::string&, const std::string& v) { t = parse_list(v); };
    };
    std::map<std::string, Setter> setters{
        {"grid.n", integer(c.grid_n)},
        {"model.q0", dbl(c.q0)},
        {"model.alphas",
         [&](const std::string& k, const std::string& v) {
             auto a = parse_list(v);
             if (a.size() != 4) throw std::invalid_argument(k + ": exactly four values required");
             std::copy(a.begin(), a.end(), c.alphas.begin());
         }},
        {"model.family", [&](const std::string&, const std::string& v) { c.family = v; }},
        {"model.f_constant", dbl(c.f_constant)},
        {"cutoff.A0", dbl(c.A0)},
        {"cutoff.smoothing", [&](const std::string&, const std::string& v) { c.smoothing = v; }},
        {"comparison.lambda0", dbl(c.lambda0)},
        {"comparison.K", dbl(c.K)},
        {"comparison.lambdas", list(c.comparison_lambdas)},
        {"appendix.N", integer(c.appendix_N)},
        {"appendix.amplitude", dbl(c.remainder_amplitude)},
        {"appendix.lambdas", list(c.appendix_lambdas)},
        {"solver.tol_grad", dbl(c.solve.tol_grad)},
        {"solver.max_newton", integer(c.solve.max_newton)},
        {"solver.linear_tol", dbl(c.solve.linear_tol)},
        {"solver.max_linear", integer(c.solve.max_linear)},
        {"eigen.block", integer(c.eigen.block)},
        {"eigen.max_iter", integer(c.eigen.max_iter)},
        {"eigen.tol", dbl(c.eigen.tol)},
        {"branch.lambdas", list(c.branch_lambdas)},
        {"mountain.lambdas", list(c.ccurve_lambdas)},
        {"mountain.nodes", integer(c.mp_nodes)},
        {"mountain.bump_radius", dbl(c.mp_bump_radius)},
        {"mountain.dt", dbl(c.mp_dt)},
        {"mountain.tol", dbl(c.mp_tol)},
        {"mountain.max_iter", integer(c.mp_max_iter)},
        {"mountain.saddle_tol", dbl(c.saddle_tol)},
        {"blowup.peak_threshold", dbl(c.blowup.peak_threshold)},
        {"blowup.case_a_ratio", dbl(c.blowup.case_a_ratio)},
        {"blowup.mass_radius_factor", dbl(c.blowup.mass_radius_factor)},
        {"blowup.c", dbl(c.blowup.c_case_b)},
        {"blowup.mean_floor", dbl(c.blowup.mean_floor)},
        {"blowup.fixture_lambda", dbl(c.blowup_fixture_lambda)},
        {"blowup.fixture_r", dbl(c.blowup_fixture_r)},
        {"blowup.fixture_n", integer(c.blowup_fixture_n)},
        {"output.dir", [&](const std::string&, const std::string& v) { c.out = v; }},
        {"seed", [&](const std::string& k, const std::string& v) { c.seed = (unsigned long long)to_int(k, v); }},
        {"jobs", integer(c.jobs)},
    };
    for (const auto& [k, v] : kv) {
        auto it = setters.find(k);
        if (it == setters.end()) {
            problems.push_back("unknown key " + k);
            continue;
        }
        try {
            it->second(k, v);
        } catch (const std::exception& e) {
            problems.push_back(k + ": cannot parse '" + v + "' (" + e.what() + ")");
        }
    }
    if (!problems.empty()) throw ConfigError(problems);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError({"cannot open config file " + path});
    std::stringstream ss;
    ss << is.rdbuf();
    return config_from_text(ss.str());
}

}  // namespace qcurv
