#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace bundlechoice {

/// Settings for the DE/rand/1/bin global minimizer. Defaults follow common
/// DE-library choices: pop = 10 x dim (min 20), F = 0.8, CR = 0.9.
struct DeConfig {
    int pop_size = 0;  // 0 = 10 x dim, at least 20
    int max_iter = 200;
    double f_weight = 0.8;
    double crossover = 0.9;
    std::vector<double> lower;
    std::vector<double> upper;
    std::uint64_t seed = 1;
    int tol_stall = 50;  // generations without improvement before stopping

    static DeConfig for_box(std::size_t dim, double lo = -10.0, double hi = 10.0);
    void validate() const;
};

struct DeResult {
    std::vector<double> argmin;
    double value = 0.0;
    std::size_t evaluations = 0;
    int generations = 0;
};

/// Minimizes a total objective over the box. Mutants are clipped to the
/// bounds; the trajectory is fully determined by the seed. Maximization is
/// expressed by negating the objective at the call site.
DeResult de_minimize(const std::function<double(std::span<const double>)>& objective,
                     const DeConfig& config);

}  // namespace bundlechoice
