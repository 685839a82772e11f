#include "bundlechoice/de.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bundlechoice/rng.hpp"

namespace bundlechoice {

DeConfig DeConfig::for_box(std::size_t dim, double lo, double hi) {
    DeConfig cfg;
    cfg.lower.assign(dim, lo);
    cfg.upper.assign(dim, hi);
    return cfg;
}

void DeConfig::validate() const {
    if (lower.size() != upper.size() || lower.empty())
        throw std::invalid_argument("DeConfig: bounds missing or mismatched");
    for (std::size_t j = 0; j < lower.size(); ++j)
        if (lower[j] > upper[j]) throw std::invalid_argument("DeConfig: lower > upper");
    if (pop_size != 0 && pop_size < 4) throw std::invalid_argument("DeConfig: pop_size must be >= 4");
    if (!(f_weight > 0.0 && f_weight <= 2.0))
        throw std::invalid_argument("DeConfig: f_weight must be in (0,2]");
    if (!(crossover >= 0.0 && crossover <= 1.0))
        throw std::invalid_argument("DeConfig: crossover must be in [0,1]");
    if (max_iter < 0) throw std::invalid_argument("DeConfig: max_iter must be >= 0");
}

DeResult de_minimize(const std::function<double(std::span<const double>)>& objective,
                     const DeConfig& config) {
    config.validate();
    const std::size_t dim = config.lower.size();
    const int np = config.pop_size > 0 ? config.pop_size
                                       : std::max<int>(20, static_cast<int>(10 * dim));

    DeResult result;

    bool degenerate = true;
    for (std::size_t j = 0; j < dim; ++j)
        if (config.lower[j] < config.upper[j]) degenerate = false;
    if (degenerate) {
        result.argmin = config.lower;
        result.value = objective(result.argmin);
        result.evaluations = 1;
        return result;
    }

    Rng rng(config.seed);
    std::vector<std::vector<double>> pop(np, std::vector<double>(dim));
    std::vector<double> cost(np);
    for (int i = 0; i < np; ++i) {
        for (std::size_t j = 0; j < dim; ++j)
            pop[i][j] = rng.uniform(config.lower[j], config.upper[j]);
        cost[i] = objective(pop[i]);
    }
    result.evaluations = static_cast<std::size_t>(np);

    int best = static_cast<int>(std::min_element(cost.begin(), cost.end()) - cost.begin());
    int stall = 0;
    std::vector<double> trial(dim);

    for (int gen = 0; gen < config.max_iter && stall < config.tol_stall; ++gen) {
        bool improved = false;
        for (int i = 0; i < np; ++i) {
            int r1, r2, r3;
            do { r1 = static_cast<int>(rng.next_index(np)); } while (r1 == i);
            do { r2 = static_cast<int>(rng.next_index(np)); } while (r2 == i || r2 == r1);
            do { r3 = static_cast<int>(rng.next_index(np)); } while (r3 == i || r3 == r1 || r3 == r2);

            const std::size_t jrand = rng.next_index(dim);
            for (std::size_t j = 0; j < dim; ++j) {
                if (j == jrand || rng.uniform() < config.crossover) {
                    double v = pop[r1][j] + config.f_weight * (pop[r2][j] - pop[r3][j]);
                    trial[j] = std::clamp(v, config.lower[j], config.upper[j]);
                } else {
                    trial[j] = pop[i][j];
                }
            }
            const double c = objective(trial);
            ++result.evaluations;
            if (c <= cost[i]) {
                pop[i] = trial;
                cost[i] = c;
                if (c < cost[best]) {
                    best = i;
                    improved = true;
                }
            }
        }
        stall = improved ? 0 : stall + 1;
        result.generations = gen + 1;
    }

    result.argmin = pop[best];
    result.value = cost[best];
    return result;
}

}  // namespace bundlechoice
