#include "qcurv/experiments.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <new>

int main(int argc, char** argv) {
    using namespace qcurv;
    CLI::App app{"Prescribed Q-curvature laboratory (negative case, flat 4-torus)"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    int jobs = 0;
    long long seed = -1;
    double lambda_min = 0, lambda_max = 0;
    int lambda_count = 0;
    std::vector<std::string> inputs;

    std::map<std::string, CLI::App*> subs;
    for (const auto& name : subcommand_names()) {
        CLI::App* s = app.add_subcommand(name);
        s->add_option("--config", config_path, "key = value configuration file");
        s->add_option("--out", out_dir, "output directory (overrides output.dir)");
        s->add_option("--jobs", jobs, "parallel lambda jobs")->check(CLI::PositiveNumber);
        s->add_option("--seed", seed, "random seed")->check(CLI::NonNegativeNumber);
        s->add_option("--lambda-min", lambda_min, "first lambda of the subcommand's grid");
        s->add_option("--lambda-max", lambda_max, "last lambda of the subcommand's grid");
        s->add_option("--lambda-count", lambda_count, "number of lambda values")->check(CLI::PositiveNumber);
        if (name == "blowup-analyze") s->add_option("inputs", inputs, "snapshot files or directories");
        subs[name] = s;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    RunRequest req;
    for (const auto& [name, s] : subs)
        if (s->parsed()) req.subcommand = name;
    req.inputs = inputs;
    try {
        req.config = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
        auto& c = req.config;
        if (!out_dir.empty()) c.out = out_dir;
        if (jobs > 0) c.jobs = jobs;
        if (seed >= 0) c.seed = (unsigned long long)seed;
        if (lambda_count > 0 || lambda_min > 0 || lambda_max > 0) {
            if (!(lambda_min > 0 && lambda_max >= lambda_min && lambda_count > 0))
                throw ConfigError({"--lambda-min, --lambda-max and --lambda-count must be given together, "
                                   "with 0 < min <= max"});
            const std::string& s = req.subcommand;
            // decade sweeps are log-spaced, continuation windows linear
            if (s == "appendix-oracle")
                c.appendix_lambdas = geomspace(lambda_min, lambda_max, lambda_count);
            else if (s == "comparison-scan")
                c.comparison_lambdas = geomspace(lambda_min, lambda_max, lambda_count);
            else if (s == "continue-branch")
                c.branch_lambdas = linspace(lambda_min, lambda_max, lambda_count);
            else if (s == "mountain-pass")
                c.ccurve_lambdas = linspace(lambda_min, lambda_max, lambda_count);
        }
        RunOutcome out = run(req, std::cout);
        std::cout << "wrote " << out.files.size() << " files and manifest.json to " << c.out << "\n";
        return out.status;
    } catch (const ConfigError& e) {
        std::cerr << e.what();
        return 2;
    } catch (const std::bad_alloc& e) {
        std::cerr << "out of memory: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
}
