#pragma once

#include "qcurv/config.hpp"

#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace qcurv {

struct RunRequest {
    std::string subcommand;
    ExperimentConfig config;
    std::vector<std::string> inputs;  // snapshot files or directories for blowup-analyze
};

struct RunOutcome {
    int status = 0;  // 0 success, 3 numerical failure
    std::vector<std::string> files;
    std::map<std::string, double> timings;
};

const std::vector<std::string>& subcommand_names();

// Runs one subcommand, writing CSV, snapshots and manifest.json into
// config.out.  Numerical failures inside a study are reported in its tables;
// an escaping exception is left to the caller.
RunOutcome run(const RunRequest& req, std::ostream& log);

std::string sha256_file(const std::string& path);

void write_manifest(const std::string& dir, const RunRequest& req, const RunOutcome& outcome);

// Calls fn(i) for i in [0, count) on at most `jobs` threads.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace qcurv
