#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcs/rng.hpp"

namespace mcs {

/// Thrown when an iterative solver fails to converge, which signals
/// ill-posed device parameters rather than a programming error.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Physical and variability parameters of the behavioral memristor model.
/// Resistances in ohms, currents in amperes, voltages in volts; sigion and
/// sigioff are relative standard deviations, sigvr and sigsb absolute ones.
struct DeviceParams {
    double roff = 10.0;      // series resistance, off fraction
    double ri = 50.0;        // fixed series resistance
    double ron = 10.0;       // series resistance, on fraction
    double ion0 = 50e-6;     // on-branch current prefactor
    double ioff0 = 2.5e-6;   // off-branch current prefactor
    double aon = 1.72;       // sinh voltage scale, on branch
    double aoff = 2.7;       // sinh voltage scale, off branch
    double h0 = 0.0;         // initial state in [0,1]
    double etas = 17.0;      // set rate slope, 1/V
    double etar = 70.0;      // reset rate slope, 1/V
    double vs = 0.14;        // set threshold
    double vr0 = -0.03;      // reset threshold
    double vt = 0.1;         // dead-zone half-width
    double isb = 6.2e-6;     // off-branch current clamp
    double gam = 0.29;       // reset state exponent
    double sigion = 0.05;    // relative std of ion0
    double sigioff = 0.07;   // relative std of ioff0
    double sigvr = 0.01;     // absolute std of vr0, volts
    double sigsb = 2.04e-7;  // absolute std of isb, amperes
    double rpp = 1e10;       // parallel leakage
    double rext = 10000.0;   // external series resistor

    /// Series resistance folded into one state-dependent term.
    [[nodiscard]] double series_resistance(double h) const {
        return ri + h * ron + (1.0 - h) * roff;
    }

    void validate() const;
};

/// Number of named model parameters exposed to the genetic fit (rext is a
/// property of the measurement setup, not a fit target).
inline constexpr int kNumFitParams = 20;

/// Name/member table used by the genetic fit and the JSON persistence.
struct ParamField {
    const char* name;
    double DeviceParams::*member;
};
const std::array<ParamField, kNumFitParams + 1>& param_fields();

/// Per-cycle (or per-run) perturbed copies of the stochastic parameters.
struct VariabilityDraw {
    double ion0;
    double ioff0;
    double vr0;
    double isb;

    static VariabilityDraw from(const DeviceParams& p) {
        return {p.ion0, p.ioff0, p.vr0, p.isb};
    }
};

/// One I-V sample and the full recorded sweep.
struct IVSample {
    double t;  // seconds
    double v;  // applied volts
    double i;  // amperes
};

struct IVTrace {
    std::vector<IVSample> samples;
    double ramp_rate = 0.0;  // amplitude / period, V/s
    double amplitude = 0.0;  // volts
    int cycles = 0;
};

VariabilityDraw sample_variability(const DeviceParams& p, Rng& rng);

/// Current through the device core at terminal voltage v_dev and state h.
double device_current(double v_dev, double h, const VariabilityDraw& d,
                      const DeviceParams& p);

/// Solve the series network rext + Rs(h) + device for the device voltage
/// and current given the applied terminal voltage. Bisection to a residual
/// below 1e-13 A; throws NumericalError after 200 iterations.
struct TerminalSolution {
    double v_dev;
    double i;
};
TerminalSolution solve_terminal(double v_applied, double h,
                                const VariabilityDraw& d,
                                const DeviceParams& p);

/// Advance the state variable under a held device voltage for dt seconds.
/// Substeps keep each |dh| <= 0.01; the result is clamped to [0,1].
double step_state(double h, double v_dev, double dt, const VariabilityDraw& d,
                  const DeviceParams& p);

/// Simulate triangle-wave ramp cycles (0 -> +A -> -A -> 0 per cycle) with
/// variability redrawn each cycle from a per-cycle sub-stream of seed.
IVTrace simulate_ramp(const DeviceParams& p, double amplitude, double period,
                      int cycles, std::uint64_t seed,
                      int samples_per_cycle = 1000);

/// Conductance of the full series stack at the read voltage, variability
/// off. Bounded above by 1/rext.
double composite_conductance(double h, const DeviceParams& p,
                             double v_read = 0.1);

}  // namespace mcs
