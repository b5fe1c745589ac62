#include "mcs/genetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <thread>

#include "mcs/io.hpp"

namespace mcs {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void GaConfig::validate() const {
    if (population_size < 2 || population_size % 2 != 0)
        throw std::invalid_argument("ga: population size must be even and >= 2");
    if (generations < 1) throw std::invalid_argument("ga: need >= 1 generation");
    if (mutation_decay <= 0.0 || mutation_decay > 1.0)
        throw std::invalid_argument("ga: decay must be in (0, 1]");
    for (int k = 0; k < kNumFitParams; ++k)
        if (!frozen[k] && bounds[k].first >= bounds[k].second)
            throw std::invalid_argument("ga: bounds min must be < max");
    if (threads < 1) throw std::invalid_argument("ga: threads must be >= 1");
    if (draws_per_eval < 1) throw std::invalid_argument("ga: draws_per_eval must be >= 1");
}

std::array<std::pair<double, double>, kNumFitParams> GaConfig::bounds_around(
    const DeviceParams& center, double factor) {
    std::array<std::pair<double, double>, kNumFitParams> bounds;
    for (int k = 0; k < kNumFitParams; ++k) {
        const double v = center.*(param_fields()[k].member);
        double lo = v / factor, hi = v * factor;
        if (lo > hi) std::swap(lo, hi);
        if (lo == hi) {  // zero-valued center: give it a symmetric window
            lo = -1.0;
            hi = 1.0;
        }
        bounds[k] = {lo, hi};
    }
    // h0 stays a state fraction regardless of the factor
    bounds[7] = {0.0, 1.0};
    return bounds;
}

namespace {

struct Sweep {
    std::size_t begin;
    std::size_t end;  // inclusive
};

/// Monotone sweep branches of a triangle trace, in order.
std::vector<Sweep> sweeps_of(const IVTrace& trace) {
    const auto& s = trace.samples;
    std::vector<Sweep> sweeps;
    if (s.size() < 2) return sweeps;
    std::size_t begin = 0;
    int dir = 0;
    for (std::size_t j = 1; j < s.size(); ++j) {
        const double dv = s[j].v - s[j - 1].v;
        const int d = dv > 0 ? 1 : (dv < 0 ? -1 : 0);
        if (d == 0) continue;
        if (dir == 0) {
            dir = d;
        } else if (d != dir) {
            sweeps.push_back({begin, j - 1});
            begin = j - 1;
            dir = d;
        }
    }
    if (dir != 0) sweeps.push_back({begin, s.size() - 1});
    return sweeps;
}

/// Interpolate the simulated current at voltage v within one sweep,
/// clamping to the sweep endpoints.
double interp_current(const IVTrace& sim, const Sweep& sweep, double v) {
    const auto& s = sim.samples;
    for (std::size_t j = sweep.begin; j < sweep.end; ++j) {
        const double va = s[j].v, vb = s[j + 1].v;
        if ((v - va) * (v - vb) <= 0.0) {
            if (va == vb) return s[j].i;
            const double w = (v - va) / (vb - va);
            return s[j].i + w * (s[j + 1].i - s[j].i);
        }
    }
    const double v_begin = s[sweep.begin].v, v_end = s[sweep.end].v;
    return std::abs(v - v_begin) < std::abs(v - v_end) ? s[sweep.begin].i
                                                       : s[sweep.end].i;
}

}  // namespace

double trace_loss(const IVTrace& sim, const std::vector<IVTrace>& refs) {
    if (refs.empty()) throw std::invalid_argument("trace_loss: empty reference set");
    const std::vector<Sweep> sim_sweeps = sweeps_of(sim);
    if (sim_sweeps.empty()) throw std::invalid_argument("trace_loss: degenerate simulation");

    double total = 0.0;
    for (const IVTrace& ref : refs) {
        const std::vector<Sweep> ref_sweeps = sweeps_of(ref);
        const std::size_t n = std::min(sim_sweeps.size(), ref_sweeps.size());
        double sum = 0.0;
        for (std::size_t b = 0; b < n; ++b) {
            for (std::size_t j = ref_sweeps[b].begin; j <= ref_sweeps[b].end; ++j) {
                const double diff = interp_current(sim, sim_sweeps[b], ref.samples[j].v) -
                                    ref.samples[j].i;
                sum += diff * diff;
            }
        }
        total += sum;
    }
    return total / static_cast<double>(refs.size());
}

namespace {

DeviceParams clamp_to_bounds(DeviceParams p, const GaConfig& cfg) {
    for (int k = 0; k < kNumFitParams; ++k) {
        if (cfg.frozen[k]) continue;
        double& v = p.*(param_fields()[k].member);
        v = std::clamp(v, cfg.bounds[k].first, cfg.bounds[k].second);
    }
    return p;
}

DeviceParams mutate(DeviceParams p, double scale, const GaConfig& cfg, Rng& rng) {
    for (int k = 0; k < kNumFitParams; ++k) {
        const double noise = rng.gaussian();  // consumed even for frozen params
        if (cfg.frozen[k]) continue;          // so the stream layout is stable
        double& v = p.*(param_fields()[k].member);
        v *= 1.0 + noise * scale;
        v = std::clamp(v, cfg.bounds[k].first, cfg.bounds[k].second);
    }
    return p;
}

}  // namespace

std::vector<Individual> evolve(const std::vector<Individual>& population,
                               int gen_index, const GaConfig& cfg, Rng& rng) {
    const std::size_t n = population.size();
    const std::size_t half = n / 2;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return population[a].loss < population[b].loss;
    });

    const double scale = cfg.initial_mutation_scale *
                         std::pow(cfg.mutation_decay, gen_index);
    std::vector<Individual> next;
    next.reserve(n);
    for (std::size_t k = 0; k < half; ++k) next.push_back(population[order[k]]);
    for (std::size_t k = 0; k < half; ++k) {
        Individual child = next[k];
        child.params = mutate(child.params, scale, cfg, rng);
        child.loss = -1.0;
        next.push_back(std::move(child));
    }
    return next;
}

namespace {

double evaluate_individual(const DeviceParams& params, const std::vector<IVTrace>& refs,
                           const GaConfig& cfg, double amplitude, double period,
                           int cycles, std::uint64_t eval_seed) {
    try {
        const Rng seeder(eval_seed);
        double sum = 0.0;
        for (int d = 0; d < cfg.draws_per_eval; ++d) {
            const IVTrace sim =
                simulate_ramp(params, amplitude, period, cycles,
                              seeder.derive(static_cast<std::uint64_t>(d)).next_u64(),
                              cfg.samples_per_cycle);
            sum += trace_loss(sim, refs);
        }
        const double loss = sum / cfg.draws_per_eval;
        return std::isfinite(loss) ? loss : kInf;
    } catch (const std::exception&) {
        return kInf;  // failed individuals are eliminated naturally
    }
}

}  // namespace

FitResult fit(const std::vector<IVTrace>& refs, const DeviceParams& init,
              const GaConfig& cfg) {
    cfg.validate();
    if (refs.empty()) throw std::invalid_argument("fit: empty reference set");

    const double amplitude = refs.front().amplitude;
    const double period = amplitude / refs.front().ramp_rate;
    const int cycles = std::max(1, refs.front().cycles);

    const Rng root(cfg.seed);
    Rng init_rng = root.derive(0x1717);

    std::vector<Individual> population;
    population.reserve(cfg.population_size);
    population.push_back({clamp_to_bounds(init, cfg), -1.0, 0});
    for (int k = 1; k < cfg.population_size; ++k)
        population.push_back(
            {mutate(init, cfg.initial_mutation_scale, cfg, init_rng), -1.0, 0});

    FitResult result;
    result.best_loss = kInf;

    for (int gen = 0; gen < cfg.generations; ++gen) {
        // pre-assigned per-individual seeds: results do not depend on the
        // evaluation schedule or worker count
        for (int k = 0; k < cfg.population_size; ++k) {
            population[k].eval_seed =
                root.derive(static_cast<std::uint64_t>(gen),
                            static_cast<std::uint64_t>(k)).next_u64();
        }

        auto eval_range = [&](int begin, int end) {
            for (int k = begin; k < end; ++k)
                population[k].loss = evaluate_individual(
                    population[k].params, refs, cfg, amplitude, period, cycles,
                    population[k].eval_seed);
        };
        if (cfg.threads <= 1) {
            eval_range(0, cfg.population_size);
        } else {
            std::vector<std::thread> workers;
            const int per = (cfg.population_size + cfg.threads - 1) / cfg.threads;
            for (int w = 0; w < cfg.threads; ++w) {
                const int begin = w * per;
                const int end = std::min(cfg.population_size, begin + per);
                if (begin < end) workers.emplace_back(eval_range, begin, end);
            }
            for (std::thread& t : workers) t.join();
        }

        double gen_best = kInf, mean = 0.0;
        int finite = 0;
        int best_index = 0;
        for (int k = 0; k < cfg.population_size; ++k) {
            if (population[k].loss < gen_best) {
                gen_best = population[k].loss;
                best_index = k;
            }
            if (std::isfinite(population[k].loss)) {
                mean += population[k].loss;
                ++finite;
            }
        }
        if (gen_best < result.best_loss) {
            result.best_loss = gen_best;
            result.best = population[best_index].params;
        }
        result.best_history.push_back(result.best_loss);
        result.mean_history.push_back(finite > 0 ? mean / finite : kInf);

        if (gen + 1 < cfg.generations) {
            Rng evolve_rng = root.derive(0xE0, static_cast<std::uint64_t>(gen));
            population = evolve(population, gen, cfg, evolve_rng);
        }
    }
    return result;
}

void write_loss_history(const FitResult& result, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open for writing: " + path.string());
    out << "generation,best_loss,mean_loss\n";
    char line[96];
    for (std::size_t g = 0; g < result.best_history.size(); ++g) {
        std::snprintf(line, sizeof line, "%zu,%.9e,%.9e\n", g,
                      result.best_history[g], result.mean_history[g]);
        out << line;
    }
}

}  // namespace mcs
