#include "mcs/device.hpp"

#include <algorithm>
#include <cmath>

namespace mcs {

namespace {
constexpr double kCurrentFloor = 1e-12;   // amperes
constexpr double kRateCap = 1e6;          // 1/s
constexpr double kMaxStateStep = 0.01;
constexpr double kResidualTol = 1e-13;    // amperes
constexpr int kMaxBisectIters = 200;
}  // namespace

void DeviceParams::validate() const {
    if (roff <= 0 || ri <= 0 || ron <= 0 || rpp <= 0 || rext <= 0)
        throw std::invalid_argument("device params: resistances must be positive");
    if (aon <= 0 || aoff <= 0)
        throw std::invalid_argument("device params: sinh scales must be positive");
    if (h0 < 0 || h0 > 1)
        throw std::invalid_argument("device params: h0 outside [0,1]");
    if (sigion < 0 || sigioff < 0 || sigvr < 0 || sigsb < 0)
        throw std::invalid_argument("device params: sigmas must be non-negative");
    if (!(ion0 > ioff0 && ioff0 > 0))
        throw std::invalid_argument("device params: need ion0 > ioff0 > 0");
}

const std::array<ParamField, kNumFitParams + 1>& param_fields() {
    static const std::array<ParamField, kNumFitParams + 1> fields = {{
        {"roff", &DeviceParams::roff},     {"ri", &DeviceParams::ri},
        {"ron", &DeviceParams::ron},       {"ion0", &DeviceParams::ion0},
        {"ioff0", &DeviceParams::ioff0},   {"aon", &DeviceParams::aon},
        {"aoff", &DeviceParams::aoff},     {"h0", &DeviceParams::h0},
        {"etas", &DeviceParams::etas},     {"etar", &DeviceParams::etar},
        {"vs", &DeviceParams::vs},         {"vr0", &DeviceParams::vr0},
        {"vt", &DeviceParams::vt},         {"isb", &DeviceParams::isb},
        {"gam", &DeviceParams::gam},       {"sigion", &DeviceParams::sigion},
        {"sigioff", &DeviceParams::sigioff}, {"sigvr", &DeviceParams::sigvr},
        {"sigsb", &DeviceParams::sigsb},   {"rpp", &DeviceParams::rpp},
        {"rext", &DeviceParams::rext},
    }};
    return fields;
}

VariabilityDraw sample_variability(const DeviceParams& p, Rng& rng) {
    VariabilityDraw d;
    d.ion0 = std::max(kCurrentFloor, p.ion0 * (1.0 + rng.gaussian() * p.sigion));
    d.ioff0 = std::max(kCurrentFloor, p.ioff0 * (1.0 + rng.gaussian() * p.sigioff));
    d.vr0 = p.vr0 + rng.gaussian() * p.sigvr;
    d.isb = std::max(kCurrentFloor, p.isb + rng.gaussian() * p.sigsb);
    return d;
}

double device_current(double v_dev, double h, const VariabilityDraw& d,
                      const DeviceParams& p) {
    const double on = h * d.ion0 * std::sinh(v_dev / p.aon);
    const double off_raw = (1.0 - h) * d.ioff0 * std::sinh(v_dev / p.aoff);
    const double off = std::clamp(off_raw, -d.isb, d.isb);
    return on + off + v_dev / p.rpp;
}

TerminalSolution solve_terminal(double v_applied, double h,
                                const VariabilityDraw& d,
                                const DeviceParams& p) {
    if (v_applied == 0.0) return {0.0, 0.0};

    const double r_series = p.rext + p.series_resistance(h);
    const double va = std::abs(v_applied);
    // residual(v) = I_device(v) - (v_applied - v)/R, strictly increasing in v
    auto residual = [&](double v) {
        return device_current(v, h, d, p) - (v_applied - v) / r_series;
    };

    double lo = -va, hi = va;
    for (int iter = 0; iter < kMaxBisectIters; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double r = residual(mid);
        if (std::abs(r) < kResidualTol)
            return {mid, device_current(mid, h, d, p)};
        if (r > 0.0)
            hi = mid;
        else
            lo = mid;
    }
    throw NumericalError("solve_terminal: no convergence after 200 iterations");
}

namespace {

double switching_rate(double arg) {
    // exp(arg) capped; the cap keeps explicit integration finite while still
    // behaving as effectively instantaneous switching.
    if (arg >= std::log(kRateCap)) return kRateCap;
    return std::exp(arg);
}

}  // namespace

double step_state(double h, double v_dev, double dt, const VariabilityDraw& d,
                  const DeviceParams& p) {
    if (dt <= 0.0) throw std::invalid_argument("step_state: dt must be positive");

    double gs = 0.0, gr = 0.0;
    if (v_dev > p.vt) gs = switching_rate(p.etas * (v_dev - p.vs));
    if (v_dev < -p.vt) gr = switching_rate(p.etar * (d.vr0 - v_dev));
    if (gs == 0.0 && gr == 0.0) return h;  // dead zone

    double remaining = dt;
    while (remaining > 0.0) {
        const double rate = gs * (1.0 - h) - gr * (h > 0.0 ? std::pow(h, p.gam) : 0.0);
        if (rate == 0.0) break;
        double sub = remaining;
        const double limit = kMaxStateStep / std::abs(rate);
        if (limit < sub) sub = limit;
        h = std::clamp(h + rate * sub, 0.0, 1.0);
        remaining -= sub;
    }
    return std::clamp(h, 0.0, 1.0);
}

namespace {

/// Triangle profile over one cycle: phase in [0,1] -> [-1,1], 0 at both ends.
double triangle(double phase) {
    if (phase <= 0.25) return 4.0 * phase;
    if (phase <= 0.75) return 2.0 - 4.0 * phase;
    return 4.0 * phase - 4.0;
}

}  // namespace

IVTrace simulate_ramp(const DeviceParams& p, double amplitude, double period,
                      int cycles, std::uint64_t seed, int samples_per_cycle) {
    if (cycles < 1) throw std::invalid_argument("simulate_ramp: cycles must be >= 1");
    if (samples_per_cycle < 4)
        throw std::invalid_argument("simulate_ramp: need >= 4 samples per cycle");
    p.validate();

    IVTrace trace;
    trace.amplitude = amplitude;
    trace.ramp_rate = amplitude / period;
    trace.cycles = cycles;
    trace.samples.reserve(static_cast<std::size_t>(cycles) * samples_per_cycle);

    const Rng root(seed);
    // One `period` is the duration of a single 0 -> A ramp leg, so |dv/dt|
    // equals amplitude/period everywhere and a full cycle lasts 4 periods.
    const double cycle_time = 4.0 * period;
    const double dt = cycle_time / samples_per_cycle;
    double h = p.h0;
    for (int c = 0; c < cycles; ++c) {
        Rng cycle_rng = root.derive(static_cast<std::uint64_t>(c));
        const VariabilityDraw draw = sample_variability(p, cycle_rng);
        for (int j = 1; j <= samples_per_cycle; ++j) {
            const double t = (c + static_cast<double>(j) / samples_per_cycle) * cycle_time;
            const double v = amplitude * triangle(static_cast<double>(j) / samples_per_cycle);
            const TerminalSolution sol = solve_terminal(v, h, draw, p);
            trace.samples.push_back({t, v, sol.i});
            h = step_state(h, sol.v_dev, dt, draw, p);
        }
    }
    return trace;
}

double composite_conductance(double h, const DeviceParams& p, double v_read) {
    if (v_read == 0.0)
        throw std::invalid_argument("composite_conductance: v_read must be nonzero");
    const TerminalSolution sol = solve_terminal(v_read, h, VariabilityDraw::from(p), p);
    return sol.i / v_read;
}

}  // namespace mcs
