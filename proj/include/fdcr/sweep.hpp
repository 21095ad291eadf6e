#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fdcr/simkernel.hpp"

namespace fdcr::sweep {

struct SweepSpec {
    std::string parameter;  ///< a SystemParams or SimConfig field name
    std::vector<double> values;
    int replicates = 1;
    std::vector<sim::Scheme> schemes{sim::Scheme::AsyncFD};
};

/// `count` evenly spaced values over [start, stop] (linear or geometric).
std::vector<double> linear_grid(double start, double stop, int count);
std::vector<double> log_grid(double start, double stop, int count);

/// Metric names emitted per (point, replicate), in output order.
std::vector<std::string> metric_names(const SweepSpec& spec);

/// Worker count: FDCR_THREADS if set and positive, else hardware concurrency.
unsigned thread_count();

/// Runs every (point, replicate, scheme) and writes the long-format CSV
/// `point,seed,metric,value,ci95`. Replicate r uses seed base.seed + r at
/// every point. Rows come out in (point, seed, metric) order whatever the
/// thread count. Throws ParamError if the spec or any point is invalid.
void run_sweep(const sim::SimConfig& base, const SweepSpec& spec, std::ostream& out, unsigned threads = 0);

}  // namespace fdcr::sweep
