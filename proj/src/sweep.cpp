#include "fdcr/sweep.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include "fdcr/analytic.hpp"
#include "fdcr/config.hpp"

namespace fdcr::sweep {

namespace {

constexpr const char* kSchemeMetrics[] = {"collision_prob", "mean_collision_duration", "max_post_collision_duration",
                                          "cumulative_collision_time", "throughput", "post_collisions"};
constexpr const char* kAnalyticMetrics[] = {"pcol_async", "pcol_lbt", "tau_bar", "r_async", "r_sync"};

struct Cell {
    double value;
    double ci95;
};

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::vector<Cell> scheme_cells(const sim::SimReport& r)
{
    return {{r.collision_prob_hat, r.collision_prob_ci},
            {r.mean_collision_duration, r.mean_collision_duration_ci},
            {r.max_post_collision_duration, 0.0},
            {r.cumulative_collision_time, 0.0},
            {r.throughput_hat, r.throughput_ci},
            {static_cast<double>(r.post_collisions), 0.0}};
}

std::vector<Cell> analytic_cells(const SystemParams& p)
{
    const auto a = analytic::evaluate(p);
    return {{a.pcol_async, 0.0}, {a.pcol_lbt, 0.0}, {a.tau_bar, 0.0}, {a.r_async, 0.0}, {a.r_sync, 0.0}};
}

}  // namespace

std::vector<double> linear_grid(double start, double stop, int count)
{
    if (count < 1) {
        throw ParamError("count", "must be >= 1");
    }
    if (count == 1) {
        return {start};
    }
    std::vector<double> out;
    for (int i = 0; i < count; ++i) {
        out.push_back(start + (stop - start) * i / (count - 1));
    }
    return out;
}

std::vector<double> log_grid(double start, double stop, int count)
{
    if (!(start > 0.0 && stop > 0.0)) {
        throw ParamError("from,to", "log grid needs positive bounds");
    }
    auto out = linear_grid(std::log(start), std::log(stop), count);
    for (double& v : out) {
        v = std::exp(v);
    }
    return out;
}

std::vector<std::string> metric_names(const SweepSpec& spec)
{
    std::vector<std::string> out;
    for (sim::Scheme s : spec.schemes) {
        for (const char* m : kSchemeMetrics) {
            out.push_back(std::string(sim::to_string(s)) + "." + m);
        }
    }
    for (const char* m : kAnalyticMetrics) {
        out.push_back(std::string("analytic.") + m);
    }
    return out;
}

unsigned thread_count()
{
    if (const char* env = std::getenv("FDCR_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n > 0) {
            return static_cast<unsigned>(n);
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void run_sweep(const sim::SimConfig& base, const SweepSpec& spec, std::ostream& out, unsigned threads)
{
    if (spec.values.empty()) {
        throw ParamError("values", "sweep needs at least one value");
    }
    if (spec.replicates < 1) {
        throw ParamError("replicates", "must be >= 1");
    }
    if (spec.schemes.empty()) {
        throw ParamError("scheme", "sweep needs at least one scheme");
    }
    // Validate every point before running anything.
    std::vector<sim::SimConfig> points;
    for (double v : spec.values) {
        sim::SimConfig c = base;
        config::set_field(c, spec.parameter, v);
        c.validate();
        points.push_back(c);
    }

    const std::size_t n_pts = points.size();
    const std::size_t n_rep = static_cast<std::size_t>(spec.replicates);
    const std::size_t n_sch = spec.schemes.size();
    const std::size_t jobs = n_pts * n_rep * n_sch;
    std::vector<std::vector<Cell>> results(jobs);

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t j = next++; j < jobs; j = next++) {
            const std::size_t pt = j / (n_rep * n_sch);
            const std::size_t rep = (j / n_sch) % n_rep;
            const std::size_t sc = j % n_sch;
            sim::SimConfig c = points[pt];
            c.seed = base.seed + rep;
            c.scheme = spec.schemes[sc];
            try {
                results[j] = scheme_cells(sim::run(c));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
    };
    if (threads == 0) {
        threads = thread_count();
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, jobs));
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < threads; ++i) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    const auto names = metric_names(spec);
    out << "point,seed,metric,value,ci95\n";
    for (std::size_t pt = 0; pt < n_pts; ++pt) {
        const auto analytic_row = analytic_cells(points[pt].params);
        for (std::size_t rep = 0; rep < n_rep; ++rep) {
            std::vector<Cell> cells;
            for (std::size_t sc = 0; sc < n_sch; ++sc) {
                const auto& r = results[(pt * n_rep + rep) * n_sch + sc];
                cells.insert(cells.end(), r.begin(), r.end());
            }
            cells.insert(cells.end(), analytic_row.begin(), analytic_row.end());
            const std::string prefix = fmt(spec.values[pt]) + "," + std::to_string(base.seed + rep) + ",";
            for (std::size_t m = 0; m < names.size(); ++m) {
                out << prefix << names[m] << ',' << fmt(cells[m].value) << ',' << fmt(cells[m].ci95) << '\n';
            }
        }
    }
}

}  // namespace fdcr::sweep
