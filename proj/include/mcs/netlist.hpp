#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "mcs/mapping.hpp"

namespace mcs {

enum class Activation { Identity, Relu, SigmoidTenth };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

/// Fully connected layer. Weights are stored row-major [out x in] in
/// siemens-equivalent units; biases as effective amperes.
struct LinearLayerSpec {
    int inputs = 0;
    int outputs = 0;
    std::vector<double> weights;  // [out][in]
    std::vector<double> biases;   // [out]
    Activation activation = Activation::Identity;
    double norm = 1e4;  // R_f gain, ohms

    double& w(int out, int in) { return weights[static_cast<std::size_t>(out) * inputs + in]; }
    double w(int out, int in) const { return weights[static_cast<std::size_t>(out) * inputs + in]; }
};

/// Convolutional layer, kernel tensor [c_out][c_in][k][k], no padding.
struct ConvLayerSpec {
    int c_in = 0;
    int c_out = 0;
    int kernel = 3;  // odd
    int stride = 2;
    std::vector<double> kernels;  // [c_out][c_in][k][k]
    std::vector<double> biases;   // [c_out]
    Activation activation = Activation::Relu;
    double norm = 1e4;

    double& kern(int co, int ci, int ki, int kj) {
        return kernels[((static_cast<std::size_t>(co) * c_in + ci) * kernel + ki) * kernel + kj];
    }
    double kern(int co, int ci, int ki, int kj) const {
        return kernels[((static_cast<std::size_t>(co) * c_in + ci) * kernel + ki) * kernel + kj];
    }
};

using LayerSpec = std::variant<LinearLayerSpec, ConvLayerSpec>;

/// Layer graph of a trained network, in hardware units.
struct NetworkSpec {
    int input_size = 16;  // pixels per side
    int input_channels = 1;
    int output_neurons = 10;
    std::vector<LayerSpec> layers;

    void validate() const;
};

/// Feature-map side length for an unpadded convolution: edge positions
/// without full kernel support are dropped.
int fmap_size(int input, int kernel, int stride);

// --- netlist component model -------------------------------------------

struct MemristorLine {
    std::string name;
    std::string node_in;
    std::string node_out;  // column node, ends in + or -
    double hvalue = 0.0;

    bool operator==(const MemristorLine&) const = default;
};

struct NeuronLine {
    std::string name;
    std::string in_plus;
    std::string in_minus;
    std::string out;
    std::string subckt;  // simple | relu | sigmoid
    double norm = 1e4;
    double bias = 0.0;

    bool operator==(const NeuronLine&) const = default;
};

struct SourceLine {
    std::string name;
    std::string node;
    std::string value;  // numeric literal or {param}

    bool operator==(const SourceLine&) const = default;
};

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CrossbarNetlist {
    std::string title = "crossbar";
    std::vector<SourceLine> sources;
    std::vector<MemristorLine> memristors;
    std::vector<NeuronLine> neurons;
    std::vector<std::string> input_params;  // in000, in001, ... when parameterized

    bool operator==(const CrossbarNetlist&) const = default;
};

/// Compile a network into the two-memristor-synapse crossbar netlist.
/// Conversion range errors carry layer/row/column coordinates.
CrossbarNetlist build_netlist(const NetworkSpec& spec, const CalibrationTable& table,
                              bool inputs_as_parameters = true);

/// Deterministic text emission (layer-major, row-major line order).
std::string emit(const CrossbarNetlist& netlist);

/// Parse the emitted dialect back; validates synapse pairing and neuron
/// arity, reporting errors with line numbers.
CrossbarNetlist parse(const std::string& text);

/// NetworkSpec persistence: JSON with shapes plus flat row-major arrays.
void write_network_json(const NetworkSpec& spec, const std::filesystem::path& path);
NetworkSpec read_network_json(const std::filesystem::path& path);

}  // namespace mcs
