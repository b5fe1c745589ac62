#include "mcs/engine.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "mcs/io.hpp"

namespace mcs {

namespace {
constexpr double kSafeLow = -0.1;   // exclusive
constexpr double kSafeHigh = 0.25;  // exclusive
}

std::size_t AnalogNetwork::synapse_count() const {
    std::size_t n = 0;
    for (const AnalogLayer& layer : layers)
        for (const AnalogNeuron& neuron : layer.neurons)
            n += neuron.synapses.size() + 1;  // + bias synapse
    return n;
}

AnalogNetwork compile(const NetworkSpec& spec, const CalibrationTable& table,
                      const DeviceParams& params) {
    spec.validate();
    AnalogNetwork net;
    net.params = params;
    net.table = table;
    net.input_count = spec.input_channels * spec.input_size * spec.input_size;

    auto convert = [&](double w, int layer, int q, int j) {
        try {
            return weight_to_synapse(w, table);
        } catch (const std::out_of_range& e) {
            throw std::out_of_range("layer " + std::to_string(layer) + " output " +
                                    std::to_string(q) + " input " + std::to_string(j) +
                                    ": " + e.what());
        }
    };

    int side = spec.input_size;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const int layer_index = static_cast<int>(l) + 1;
        AnalogLayer layer;
        if (const auto* lin = std::get_if<LinearLayerSpec>(&spec.layers[l])) {
            layer.activation = lin->activation;
            layer.norm = lin->norm;
            layer.neurons.resize(lin->outputs);
            for (int q = 0; q < lin->outputs; ++q) {
                AnalogNeuron& neuron = layer.neurons[q];
                neuron.synapses.reserve(lin->inputs);
                for (int j = 0; j < lin->inputs; ++j)
                    neuron.synapses.push_back(
                        {j, convert(lin->w(q, j), layer_index, q, j), lin->w(q, j)});
                neuron.bias_pair = bias_to_synapse(lin->biases[q], table);
                neuron.exact_bias = lin->biases[q];
            }
            side = 0;
        } else {
            const auto& conv = std::get<ConvLayerSpec>(spec.layers[l]);
            layer.activation = conv.activation;
            layer.norm = conv.norm;
            const int f = fmap_size(side, conv.kernel, conv.stride);
            const int k = conv.kernel, s = conv.stride;
            layer.neurons.resize(static_cast<std::size_t>(conv.c_out) * f * f);
            for (int co = 0; co < conv.c_out; ++co)
                for (int i = 0; i < f; ++i)
                    for (int j = 0; j < f; ++j) {
                        AnalogNeuron& neuron =
                            layer.neurons[(static_cast<std::size_t>(co) * f + i) * f + j];
                        for (int ci = 0; ci < conv.c_in; ++ci)
                            for (int ki = 0; ki < k; ++ki)
                                for (int kj = 0; kj < k; ++kj) {
                                    const int flat =
                                        (ci * side + i * s + ki) * side + (j * s + kj);
                                    const double w = conv.kern(co, ci, ki, kj);
                                    neuron.synapses.push_back(
                                        {flat, convert(w, layer_index,
                                                       (co * f + i) * f + j,
                                                       (ci * k + ki) * k + kj),
                                         w});
                                }
                        neuron.bias_pair = bias_to_synapse(conv.biases[co], table);
                        neuron.exact_bias = conv.biases[co];
                    }
            side = f;
        }
        net.layers.push_back(std::move(layer));
    }
    return net;
}

namespace {

std::uint64_t draw_fingerprint_of(const VariabilityDraw& d) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    auto mix = [&hash](double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        for (int k = 0; k < 8; ++k) {
            hash ^= (bits >> (8 * k)) & 0xff;
            hash *= 0x100000001b3ULL;
        }
    };
    mix(d.ion0);
    mix(d.ioff0);
    mix(d.vr0);
    mix(d.isb);
    return hash;
}

/// Current delivered by one memristor pair into its (+,-) columns for a
/// row voltage v, as i_plus - i_minus.
double pair_current(const AnalogNetwork& net, const SynapsePair& pair,
                    double exact, double v, const VariabilityDraw& draw) {
    if (v == 0.0) return 0.0;
    if (net.mode == EngineMode::Linear) {
        if (net.exact_conductance) return v * exact;
        return v * (net.table.g_at(pair.h_plus) - net.table.g_at(pair.h_minus));
    }
    const double i_plus = solve_terminal(v, pair.h_plus, draw, net.params).i;
    const double i_minus = solve_terminal(v, pair.h_minus, draw, net.params).i;
    return i_plus - i_minus;
}

double bias_pair_current(const AnalogNetwork& net, const AnalogNeuron& neuron,
                         const VariabilityDraw& draw) {
    if (net.mode == EngineMode::Linear && net.exact_conductance)
        return neuron.exact_bias;  // b = 0.1 V * (b / 0.1 V)
    return pair_current(net, neuron.bias_pair, neuron.exact_bias / net.bias_voltage,
                        net.bias_voltage, draw);
}

double apply_activation(Activation act, double z) {
    switch (act) {
        case Activation::Identity: return z;
        case Activation::Relu: return z > 0.0 ? z : 0.0;
        case Activation::SigmoidTenth: return 0.1 / (1.0 + std::exp(-z));
    }
    return z;
}

}  // namespace

RunResult run(const AnalogNetwork& net, const std::vector<double>& input_voltages,
              Rng& rng, bool variability) {
    if (static_cast<int>(input_voltages.size()) != net.input_count)
        throw std::invalid_argument("run: input size mismatch");
    for (double v : input_voltages)
        if (v < -0.1 || v > 0.1)
            throw std::invalid_argument("run: input voltage outside [-0.1, 0.1]");

    RunResult result;
    VariabilityDraw draw = VariabilityDraw::from(net.params);
    if (variability && !net.per_device_variability) {
        draw = sample_variability(net.params, rng);
        result.draw_fingerprint = draw_fingerprint_of(draw);
    }

    std::vector<double> x = input_voltages;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const AnalogLayer& layer = net.layers[l];
        std::vector<double> out(layer.neurons.size());
        for (std::size_t q = 0; q < layer.neurons.size(); ++q) {
            const AnalogNeuron& neuron = layer.neurons[q];
            VariabilityDraw local = draw;
            double current = 0.0;
            for (const SynapseEntry& syn : neuron.synapses) {
                if (variability && net.per_device_variability)
                    local = sample_variability(net.params, rng);
                current += pair_current(net, syn.pair, syn.exact_w, x[syn.input], local);
            }
            if (variability && net.per_device_variability)
                local = sample_variability(net.params, rng);
            current += bias_pair_current(net, {.bias_pair = neuron.bias_pair,
                                               .exact_bias = neuron.exact_bias},
                                         local);
            const double z = layer.norm * current;
            out[q] = apply_activation(layer.activation, z);
            if (l + 1 < net.layers.size() &&
                (out[q] <= kSafeLow || out[q] >= kSafeHigh))
                result.violations.push_back(
                    {static_cast<int>(l) + 1, static_cast<int>(q), out[q]});
        }
        x = std::move(out);
    }

    result.outputs = std::move(x);
    result.predicted = static_cast<int>(
        std::max_element(result.outputs.begin(), result.outputs.end()) -
        result.outputs.begin());
    return result;
}

std::vector<RunResult> monte_carlo(const AnalogNetwork& net,
                                   const std::vector<double>& input_voltages,
                                   int n, std::uint64_t seed, int threads) {
    if (n < 1) throw std::invalid_argument("monte_carlo: n must be >= 1");
    std::vector<RunResult> results(n);
    const Rng root(seed);
    auto work = [&](int begin, int end) {
        for (int k = begin; k < end; ++k) {
            Rng stream = root.derive(static_cast<std::uint64_t>(k));
            results[k] = run(net, input_voltages, stream, true);
        }
    };
    if (threads <= 1) {
        work(0, n);
    } else {
        std::vector<std::thread> workers;
        const int per = (n + threads - 1) / threads;
        for (int w = 0; w < threads; ++w) {
            const int begin = w * per, end = std::min(n, begin + per);
            if (begin < end) workers.emplace_back(work, begin, end);
        }
        for (std::thread& t : workers) t.join();
    }
    return results;
}

EvaluationResult evaluate(const AnalogNetwork& net, const Dataset& data,
                          std::size_t limit, int runs_per_input,
                          std::uint64_t seed, int threads) {
    const std::size_t n = std::min(limit, data.count());
    if (n == 0) throw std::invalid_argument("evaluate: empty slice");
    if (runs_per_input < 1)
        throw std::invalid_argument("evaluate: runs_per_input must be >= 1");

    EvaluationResult result;
    result.predictions.assign(n, -1);
    std::vector<std::uint8_t> violated(n, 0);

    const Rng root(seed);
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t idx = begin; idx < end; ++idx) {
            std::vector<double> input(static_cast<std::size_t>(net.input_count));
            const float* img = data.image(idx);
            for (std::size_t k = 0; k < input.size(); ++k)
                input[k] = to_voltage(img[k]);

            std::array<int, 10> votes{};
            bool any_violation = false;
            for (int r = 0; r < runs_per_input; ++r) {
                Rng stream = root.derive(idx, static_cast<std::uint64_t>(r));
                const RunResult rr = run(net, input, stream, true);
                ++votes[rr.predicted];
                any_violation = any_violation || !rr.violations.empty();
            }
            // majority, ties toward the lowest class index
            result.predictions[idx] = static_cast<int>(
                std::max_element(votes.begin(), votes.end()) - votes.begin());
            violated[idx] = any_violation ? 1 : 0;
        }
    };
    if (threads <= 1) {
        work(0, n);
    } else {
        std::vector<std::thread> workers;
        const std::size_t per = (n + threads - 1) / threads;
        for (int w = 0; w < threads; ++w) {
            const std::size_t begin = w * per, end = std::min(n, begin + per);
            if (begin < end) workers.emplace_back(work, begin, end);
        }
        for (std::thread& t : workers) t.join();
    }

    std::size_t correct = 0;
    for (std::size_t idx = 0; idx < n; ++idx) {
        if (result.predictions[idx] == data.labels[idx]) ++correct;
        result.violation_runs += violated[idx];
    }
    result.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    return result;
}

TimingEstimate estimate_timing(const EstimatorInputs& e,
                               const std::vector<int>& devices_in_parallel) {
    if (devices_in_parallel.empty())
        throw std::invalid_argument("estimate_timing: no layer counts");
    long total = 0;
    for (int c : devices_in_parallel) {
        if (c <= 0) throw std::invalid_argument("estimate_timing: counts must be positive");
        total += c;
    }
    const double t = e.interconnect_resistance * static_cast<double>(total) *
                     e.device_capacitance;
    return {t, 1.0 / t};
}

double estimate_power(const EstimatorInputs& e, int neuron_count) {
    if (neuron_count <= 0)
        throw std::invalid_argument("estimate_power: neuron count must be positive");
    return e.opamp_current * e.supply_voltage * neuron_count;
}

void write_report_json(const EvaluationReport& report, const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["architecture"] = report.architecture;
    j["input_size"] = report.input_size;
    j["digital_accuracy"] = report.digital_accuracy;
    j["analog_accuracy"] = report.analog_accuracy;
    j["ratio"] = report.ratio();
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open for writing: " + path.string());
    out << j.dump(2) << '\n';
}

EvaluationReport read_report_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open report: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad report json " + path.string() + ": " + e.what());
    }
    EvaluationReport report;
    report.architecture = j.at("architecture").get<std::string>();
    report.input_size = j.at("input_size").get<int>();
    report.digital_accuracy = j.at("digital_accuracy").get<double>();
    report.analog_accuracy = j.at("analog_accuracy").get<double>();
    return report;
}

void write_monte_carlo_csv(const std::vector<RunResult>& runs,
                           const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open for writing: " + path.string());
    out << "run";
    for (int c = 0; c < 10; ++c) out << ",class" << c;
    out << ",predicted\n";
    for (std::size_t r = 0; r < runs.size(); ++r) {
        out << r;
        char cell[32];
        for (double v : runs[r].outputs) {
            std::snprintf(cell, sizeof cell, ",%.9e", v);
            out << cell;
        }
        out << "," << runs[r].predicted << "\n";
    }
}

}  // namespace mcs
