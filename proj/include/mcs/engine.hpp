#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mcs/netlist.hpp"
#include "mcs/trainer.hpp"

namespace mcs {

enum class EngineMode { Linear, Nonlinear };

/// One synapse pair bound to an input position of a column.
struct SynapseEntry {
    int input;        // flat index into the layer input vector
    SynapsePair pair;
    double exact_w;   // siemens, for the table-bypass oracle mode
};

struct AnalogNeuron {
    std::vector<SynapseEntry> synapses;
    SynapsePair bias_pair;
    double exact_bias = 0.0;  // effective amperes
};

struct AnalogLayer {
    std::vector<AnalogNeuron> neurons;
    Activation activation = Activation::Identity;
    double norm = 1e4;
};

/// Crossbar network compiled for behavioral evaluation. Columns are ideal
/// virtual grounds, so each device sees its row voltage directly.
struct AnalogNetwork {
    std::vector<AnalogLayer> layers;
    DeviceParams params;
    CalibrationTable table;
    EngineMode mode = EngineMode::Nonlinear;
    bool exact_conductance = false;  // bypass the table (oracle tests only)
    bool per_device_variability = false;
    double bias_voltage = kBiasVoltage;
    int input_count = 0;

    [[nodiscard]] std::size_t synapse_count() const;
};

struct Violation {
    int layer;
    int node;
    double volts;
};

struct RunResult {
    std::vector<double> outputs;  // volts per class
    int predicted = -1;
    std::vector<Violation> violations;
    std::uint64_t draw_fingerprint = 0;
};

AnalogNetwork compile(const NetworkSpec& spec, const CalibrationTable& table,
                      const DeviceParams& params);

RunResult run(const AnalogNetwork& net, const std::vector<double>& input_voltages,
              Rng& rng, bool variability);

/// n independent runs with pre-assigned sub-seeds; the result order is
/// fixed by index, independent of any execution schedule.
std::vector<RunResult> monte_carlo(const AnalogNetwork& net,
                                   const std::vector<double>& input_voltages,
                                   int n, std::uint64_t seed, int threads = 1);

struct EvaluationResult {
    double accuracy = 0.0;
    std::vector<int> predictions;  // majority vote per input
    std::size_t violation_runs = 0;
};

/// Accuracy over a dataset slice; every (input, run) pair gets its own
/// seeded stream, so results are identical for any worker count.
EvaluationResult evaluate(const AnalogNetwork& net, const Dataset& data,
                          std::size_t limit, int runs_per_input,
                          std::uint64_t seed, int threads = 1);

struct EstimatorInputs {
    double interconnect_resistance = 5.0;  // ohms
    double device_capacitance = 20e-12;    // farads
    double opamp_current = 7.54e-4;        // amperes
    double supply_voltage = 5.0;           // volts
};

struct TimingEstimate {
    double seconds;
    double hertz;
};

/// First-order RC estimate: T = R * (sum of per-layer parallel devices) * C.
TimingEstimate estimate_timing(const EstimatorInputs& e,
                               const std::vector<int>& devices_in_parallel);

/// P = op-amp current * supply * neuron count.
double estimate_power(const EstimatorInputs& e, int neuron_count);

/// Table-5 style comparison row.
struct EvaluationReport {
    std::string architecture;
    int input_size = 0;
    double digital_accuracy = 0.0;
    double analog_accuracy = 0.0;

    [[nodiscard]] double ratio() const {
        return digital_accuracy > 0 ? analog_accuracy / digital_accuracy : 0.0;
    }
};

void write_report_json(const EvaluationReport& report, const std::filesystem::path& path);
EvaluationReport read_report_json(const std::filesystem::path& path);

/// Monte-Carlo spread export: `run,class0..class9,predicted`.
void write_monte_carlo_csv(const std::vector<RunResult>& runs,
                           const std::filesystem::path& path);

}  // namespace mcs
