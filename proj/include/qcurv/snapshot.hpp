#pragma once

#include "qcurv/grid.hpp"

#include <string>

namespace qcurv {

// QC4F snapshot: "QC4F", u32 version = 1, u32 N, f64 lambda, N^4 f64 values,
// little-endian, last axis fastest.
struct Snapshot {
    ScalarField field;
    double lambda = 0.0;
};

void write_snapshot(const std::string& path, const ScalarField& u, double lambda);
Snapshot read_snapshot(const std::string& path);

}  // namespace qcurv
