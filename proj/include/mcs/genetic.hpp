#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "mcs/device.hpp"

namespace mcs {

/// Elimination/mutation GA configuration. Bounds and the frozen mask are
/// indexed like param_fields() (the 20 fit parameters; rext is fixed).
struct GaConfig {
    int population_size = 32;  // even, >= 2
    int generations = 40;
    double initial_mutation_scale = 0.2;  // relative
    double mutation_decay = 0.97;         // per generation, in (0, 1]
    std::array<std::pair<double, double>, kNumFitParams> bounds{};
    std::array<bool, kNumFitParams> frozen{};
    std::uint64_t seed = 0;
    int threads = 1;

    // simulation settings for individual evaluation
    int samples_per_cycle = 1000;
    int draws_per_eval = 1;  // variability draws averaged per individual

    void validate() const;

    /// Bounds at [value/factor, value*factor] around a center parameter set
    /// (swapped for negative values so min < max always holds).
    static std::array<std::pair<double, double>, kNumFitParams> bounds_around(
        const DeviceParams& center, double factor);
};

struct Individual {
    DeviceParams params;
    double loss = -1.0;  // sum of squared differences; < 0 means unevaluated
    std::uint64_t eval_seed = 0;
};

struct FitResult {
    DeviceParams best;
    double best_loss = 0.0;
    std::vector<double> best_history;  // per generation
    std::vector<double> mean_history;
};

/// Mean over references of the summed squared current differences, with the
/// simulated curve mapped onto each reference by linear interpolation in
/// applied voltage per monotone sweep branch.
double trace_loss(const IVTrace& sim, const std::vector<IVTrace>& refs);

/// One elimination/mutation step: the best half survives unchanged, the
/// worst half is replaced by mutated survivor copies.
std::vector<Individual> evolve(const std::vector<Individual>& population,
                               int gen_index, const GaConfig& cfg, Rng& rng);

FitResult fit(const std::vector<IVTrace>& refs, const DeviceParams& init,
              const GaConfig& cfg);

void write_loss_history(const FitResult& result, const std::filesystem::path& path);

}  // namespace mcs
