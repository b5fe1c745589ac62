#include "mcs/netlist.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "mcs/io.hpp"

namespace mcs {

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Relu: return "relu";
        case Activation::SigmoidTenth: return "sigmoid_tenth";
    }
    return "identity";
}

Activation activation_from_name(const std::string& name) {
    if (name == "identity") return Activation::Identity;
    if (name == "relu") return Activation::Relu;
    if (name == "sigmoid_tenth") return Activation::SigmoidTenth;
    throw FormatError("unknown activation: " + name);
}

namespace {

/// Neuron sub-circuit variants differ only in the activation they apply.
const char* neuron_subckt(Activation a) {
    switch (a) {
        case Activation::Identity: return "simple";
        case Activation::Relu: return "relu";
        case Activation::SigmoidTenth: return "sigmoid";
    }
    return "simple";
}

Activation activation_from_subckt(const std::string& s) {
    if (s == "simple") return Activation::Identity;
    if (s == "relu") return Activation::Relu;
    if (s == "sigmoid") return Activation::SigmoidTenth;
    throw ParseError("unknown sub-circuit: " + s);
}

std::string fmt_hvalue(double h) {
    if (h == 0.0) return "0";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%e", h);
    return buf;
}

std::string fmt_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace

int fmap_size(int input, int kernel, int stride) {
    if (kernel < 1 || kernel % 2 == 0)
        throw std::invalid_argument("fmap_size: kernel must be odd and positive");
    if (stride < 1) throw std::invalid_argument("fmap_size: stride must be >= 1");
    const int cropped = input - 2 * (kernel / 2);
    const int result = cropped / stride;
    if (cropped <= 0 || result <= 0)
        throw std::invalid_argument("fmap_size: architecture leaves no output positions");
    return result;
}

void NetworkSpec::validate() const {
    if (layers.empty()) throw std::invalid_argument("network has no layers");
    int count = input_channels * input_size * input_size;
    int side = input_size, channels = input_channels;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (const auto* lin = std::get_if<LinearLayerSpec>(&layers[l])) {
            if (lin->inputs != count)
                throw std::invalid_argument("layer " + std::to_string(l + 1) +
                                            ": linear input arity mismatch");
            if (lin->weights.size() != static_cast<std::size_t>(lin->inputs) * lin->outputs ||
                lin->biases.size() != static_cast<std::size_t>(lin->outputs))
                throw std::invalid_argument("layer " + std::to_string(l + 1) +
                                            ": parameter count mismatch");
            count = lin->outputs;
            side = 0;
        } else {
            const auto& conv = std::get<ConvLayerSpec>(layers[l]);
            if (side == 0)
                throw std::invalid_argument("conv layer after a linear layer");
            if (conv.c_in != channels)
                throw std::invalid_argument("layer " + std::to_string(l + 1) +
                                            ": conv channel mismatch");
            side = fmap_size(side, conv.kernel, conv.stride);
            channels = conv.c_out;
            count = channels * side * side;
        }
    }
    const auto* last = std::get_if<LinearLayerSpec>(&layers.back());
    if (!last || last->outputs != output_neurons)
        throw std::invalid_argument("final layer must be linear with output_neurons outputs");
}

namespace {

struct Builder {
    const CalibrationTable& table;
    CrossbarNetlist net;

    std::string column_node(int layer, int q, bool is_last) const {
        if (is_last) return "OUTPUT" + std::to_string(q);
        return "H" + std::to_string(layer) + std::to_string(q);
    }

    void add_synapse(const std::string& name, const std::string& in_node,
                     const std::string& col_base, const SynapsePair& pair) {
        net.memristors.push_back({name + "+", in_node, col_base + "+", pair.h_plus});
        net.memristors.push_back({name + "-", in_node, col_base + "-", pair.h_minus});
    }

    void add_neuron(int layer, int q, const std::string& col_base,
                    const std::string& out_node, Activation act, double norm) {
        net.neurons.push_back({"XNeuron" + std::to_string(layer) + std::to_string(q),
                               col_base + "+", col_base + "-", out_node,
                               neuron_subckt(act), norm, 0.0});
    }

    SynapsePair convert_weight(double w, int layer, int q, int j) {
        try {
            return weight_to_synapse(w, table);
        } catch (const std::out_of_range& e) {
            throw std::out_of_range("layer " + std::to_string(layer) + " output " +
                                    std::to_string(q) + " input " + std::to_string(j) +
                                    ": " + e.what());
        }
    }

    SynapsePair convert_bias(double b, int layer, int q) {
        try {
            return bias_to_synapse(b, table);
        } catch (const std::out_of_range& e) {
            throw std::out_of_range("layer " + std::to_string(layer) + " bias " +
                                    std::to_string(q) + ": " + e.what());
        }
    }

    std::vector<std::string> build_linear(const LinearLayerSpec& layer,
                                          const std::vector<std::string>& inputs,
                                          int layer_index, bool is_last) {
        std::vector<std::string> outputs;
        for (int q = 0; q < layer.outputs; ++q) {
            const std::string col = "H" + std::to_string(layer_index) + std::to_string(q);
            for (int j = 0; j < layer.inputs; ++j) {
                const SynapsePair pair = convert_weight(layer.w(q, j), layer_index, q, j);
                add_synapse("Xw" + std::to_string(layer_index) + std::to_string(q) +
                                "_" + std::to_string(j),
                            inputs[j], col, pair);
            }
            const SynapsePair bias = convert_bias(layer.biases[q], layer_index, q);
            add_synapse("Xb" + std::to_string(layer_index) + std::to_string(q),
                        "Bias", col, bias);
            const std::string out = column_node(layer_index, q, is_last);
            add_neuron(layer_index, q, col, out, layer.activation, layer.norm);
            outputs.push_back(out);
        }
        return outputs;
    }

    std::vector<std::string> build_conv(const ConvLayerSpec& layer,
                                        const std::vector<std::string>& inputs,
                                        int input_side, int layer_index) {
        const int f = fmap_size(input_side, layer.kernel, layer.stride);
        const int k = layer.kernel;
        std::vector<std::string> outputs;
        auto input_at = [&](int ci, int y, int x) -> const std::string& {
            return inputs[(static_cast<std::size_t>(ci) * input_side + y) * input_side + x];
        };
        for (int co = 0; co < layer.c_out; ++co) {
            for (int i = 0; i < f; ++i) {
                for (int j = 0; j < f; ++j) {
                    const int q = (co * f + i) * f + j;
                    const std::string col =
                        "H" + std::to_string(layer_index) + std::to_string(q);
                    for (int ci = 0; ci < layer.c_in; ++ci) {
                        for (int ki = 0; ki < k; ++ki) {
                            for (int kj = 0; kj < k; ++kj) {
                                const int r = (ci * k + ki) * k + kj;
                                const SynapsePair pair = convert_weight(
                                    layer.kern(co, ci, ki, kj), layer_index, q, r);
                                add_synapse("Xw" + std::to_string(layer_index) +
                                                std::to_string(q) + "_" + std::to_string(r),
                                            input_at(ci, i * layer.stride + ki,
                                                     j * layer.stride + kj),
                                            col, pair);
                            }
                        }
                    }
                    const SynapsePair bias = convert_bias(layer.biases[co], layer_index, q);
                    add_synapse("Xb" + std::to_string(layer_index) + std::to_string(q),
                                "Bias", col, bias);
                    const std::string out = column_node(layer_index, q, false);
                    add_neuron(layer_index, q, col, out, layer.activation, layer.norm);
                    outputs.push_back(out);
                }
            }
        }
        return outputs;
    }
};

}  // namespace

CrossbarNetlist build_netlist(const NetworkSpec& spec, const CalibrationTable& table,
                              bool inputs_as_parameters) {
    spec.validate();
    Builder builder{table, {}};
    CrossbarNetlist& net = builder.net;
    net.sources.push_back({"Vbias", "Bias", "0.1"});

    const int n_inputs = spec.input_channels * spec.input_size * spec.input_size;
    std::vector<std::string> nodes;
    nodes.reserve(n_inputs);
    for (int j = 0; j < n_inputs; ++j) {
        const std::string node = "H0" + std::to_string(j);
        char pname[16];
        std::snprintf(pname, sizeof pname, "in%03d", j);
        std::string value;
        if (inputs_as_parameters) {
            net.input_params.emplace_back(pname);
            value = std::string("{") + pname + "}";
        } else {
            value = "0";
        }
        net.sources.push_back({"V" + std::string(pname), node, value});
        nodes.push_back(node);
    }

    int side = spec.input_size;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const int layer_index = static_cast<int>(l) + 1;
        const bool is_last = l + 1 == spec.layers.size();
        if (const auto* lin = std::get_if<LinearLayerSpec>(&spec.layers[l])) {
            nodes = builder.build_linear(*lin, nodes, layer_index, is_last);
        } else {
            const auto& conv = std::get<ConvLayerSpec>(spec.layers[l]);
            nodes = builder.build_conv(conv, nodes, side, layer_index);
            side = fmap_size(side, conv.kernel, conv.stride);
        }
    }
    return net;
}

std::string emit(const CrossbarNetlist& netlist) {
    std::ostringstream out;
    out << "* " << netlist.title << "\n";
    if (!netlist.input_params.empty()) {
        out << ".subckt " << netlist.title;
        for (const NeuronLine& n : netlist.neurons)
            if (n.out.rfind("OUTPUT", 0) == 0) out << " " << n.out;
        out << " PARAMS:";
        for (const std::string& p : netlist.input_params) out << " " << p << "=0";
        out << "\n";
    }
    for (const SourceLine& v : netlist.sources)
        out << v.name << "\t" << v.node << "\t0\t" << v.value << "\n";
    for (const MemristorLine& m : netlist.memristors)
        out << m.name << "\t" << m.node_in << "\t" << m.node_out
            << "\tmemristor PARAMS: Hvalue=" << fmt_hvalue(m.hvalue) << "\n";
    for (const NeuronLine& n : netlist.neurons)
        out << n.name << "\t" << n.in_plus << "\t" << n.in_minus << "\t" << n.out
            << "\t" << n.subckt << " PARAMS: norm=" << fmt_g(n.norm)
            << " bias=" << fmt_g(n.bias) << "\n";
    if (!netlist.input_params.empty()) out << ".ends " << netlist.title << "\n";
    return out.str();
}

namespace {

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> tokens;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
    return tokens;
}

[[noreturn]] void fail(int lineno, const std::string& what) {
    throw ParseError("line " + std::to_string(lineno) + ": " + what);
}

double parse_param(const std::string& token, const std::string& key, int lineno) {
    const std::string prefix = key + "=";
    if (token.rfind(prefix, 0) != 0)
        fail(lineno, "expected " + prefix + "..., got `" + token + "`");
    try {
        return std::stod(token.substr(prefix.size()));
    } catch (const std::exception&) {
        fail(lineno, "bad numeric value in `" + token + "`");
    }
}

void validate(const CrossbarNetlist& net) {
    if (net.memristors.empty() && net.neurons.empty())
        throw ParseError("empty netlist: no components");

    // synapse pairing: +/- name twins sharing the input node
    std::map<std::string, const MemristorLine*> by_name;
    for (const MemristorLine& m : net.memristors) {
        if (m.name.empty() || (m.name.back() != '+' && m.name.back() != '-'))
            throw ParseError("memristor name must end in + or -: " + m.name);
        by_name[m.name] = &m;
    }
    for (const MemristorLine& m : net.memristors) {
        std::string twin = m.name;
        twin.back() = twin.back() == '+' ? '-' : '+';
        const auto it = by_name.find(twin);
        if (it == by_name.end())
            throw ParseError("unpaired synapse memristor: " + m.name);
        if (it->second->node_in != m.node_in)
            throw ParseError("synapse halves on different inputs: " + m.name);
    }

    // every column node feeds exactly one neuron input
    std::map<std::string, int> column_use;
    for (const MemristorLine& m : net.memristors) ++column_use[m.node_out];
    std::map<std::string, int> neuron_use;
    for (const NeuronLine& n : net.neurons) {
        ++neuron_use[n.in_plus];
        ++neuron_use[n.in_minus];
        if (!column_use.count(n.in_plus))
            throw ParseError("dangling neuron input node: " + n.in_plus);
        if (!column_use.count(n.in_minus))
            throw ParseError("dangling neuron input node: " + n.in_minus);
    }
    for (const auto& [node, count] : column_use) {
        const auto it = neuron_use.find(node);
        if (it == neuron_use.end())
            throw ParseError("dangling column node: " + node);
        if (it->second != 1)
            throw ParseError("column node consumed by multiple neurons: " + node);
    }
}

}  // namespace

CrossbarNetlist parse(const std::string& text) {
    CrossbarNetlist net;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    bool saw_title = false;
    while (std::getline(in, line)) {
        ++lineno;
        const std::vector<std::string> tokens = tokenize(line);
        if (tokens.empty()) continue;
        const std::string& head = tokens[0];
        if (head[0] == '*') {
            if (!saw_title && tokens.size() >= 2) {
                net.title = tokens[1];
                saw_title = true;
            }
            continue;
        }
        if (head[0] == '.') {
            if (head == ".subckt") {
                if (tokens.size() < 2) fail(lineno, ".subckt without a name");
                net.title = tokens[1];
                bool in_params = false;
                for (std::size_t k = 2; k < tokens.size(); ++k) {
                    if (tokens[k] == "PARAMS:") {
                        in_params = true;
                    } else if (in_params) {
                        const auto eq = tokens[k].find('=');
                        if (eq == std::string::npos)
                            fail(lineno, "malformed parameter `" + tokens[k] + "`");
                        net.input_params.push_back(tokens[k].substr(0, eq));
                    }
                }
            }
            continue;  // .ends, .func, .param, .backanno are structural noise
        }
        if (head[0] == 'V') {
            if (tokens.size() != 4 || tokens[2] != "0")
                fail(lineno, "voltage source needs `name node 0 value`");
            net.sources.push_back({tokens[0], tokens[1], tokens[3]});
            continue;
        }
        if (head[0] == 'X') {
            if (tokens.size() < 4)
                fail(lineno, "instance line has " + std::to_string(tokens.size()) +
                                 " tokens where at least 4 expected");
            if (tokens[3] == "memristor") {
                if (tokens.size() != 6 || tokens[4] != "PARAMS:")
                    fail(lineno, "memristor line needs `name in out memristor PARAMS: Hvalue=...`");
                net.memristors.push_back({tokens[0], tokens[1], tokens[2],
                                          parse_param(tokens[5], "Hvalue", lineno)});
            } else if (tokens.size() >= 5) {
                activation_from_subckt(tokens[4]);  // throws on unknown name
                if (tokens.size() != 8 || tokens[5] != "PARAMS:")
                    fail(lineno, "neuron line needs `name in+ in- out subckt PARAMS: norm=... bias=...`");
                net.neurons.push_back({tokens[0], tokens[1], tokens[2], tokens[3],
                                       tokens[4], parse_param(tokens[6], "norm", lineno),
                                       parse_param(tokens[7], "bias", lineno)});
            } else {
                fail(lineno, "unknown sub-circuit reference in `" + line + "`");
            }
            continue;
        }
        fail(lineno, "unrecognized line `" + line + "`");
    }
    validate(net);
    return net;
}

void write_network_json(const NetworkSpec& spec, const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["comment"] = "weights are siemens-equivalent, biases effective amperes; arrays row-major";
    j["input_size"] = spec.input_size;
    j["input_channels"] = spec.input_channels;
    j["output_neurons"] = spec.output_neurons;
    j["layers"] = nlohmann::json::array();
    for (const LayerSpec& layer : spec.layers) {
        nlohmann::ordered_json jl;
        if (const auto* lin = std::get_if<LinearLayerSpec>(&layer)) {
            jl["type"] = "linear";
            jl["inputs"] = lin->inputs;
            jl["outputs"] = lin->outputs;
            jl["activation"] = activation_name(lin->activation);
            jl["norm"] = lin->norm;
            jl["weights"] = lin->weights;
            jl["biases"] = lin->biases;
        } else {
            const auto& conv = std::get<ConvLayerSpec>(layer);
            jl["type"] = "conv";
            jl["c_in"] = conv.c_in;
            jl["c_out"] = conv.c_out;
            jl["kernel"] = conv.kernel;
            jl["stride"] = conv.stride;
            jl["activation"] = activation_name(conv.activation);
            jl["norm"] = conv.norm;
            jl["kernels"] = conv.kernels;
            jl["biases"] = conv.biases;
        }
        j["layers"].push_back(jl);
    }
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open for writing: " + path.string());
    out << j.dump() << '\n';
}

NetworkSpec read_network_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open network spec: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad network json " + path.string() + ": " + e.what());
    }
    NetworkSpec spec;
    spec.input_size = j.at("input_size").get<int>();
    spec.input_channels = j.at("input_channels").get<int>();
    spec.output_neurons = j.at("output_neurons").get<int>();
    for (const auto& jl : j.at("layers")) {
        const std::string type = jl.at("type").get<std::string>();
        if (type == "linear") {
            LinearLayerSpec lin;
            lin.inputs = jl.at("inputs").get<int>();
            lin.outputs = jl.at("outputs").get<int>();
            lin.activation = activation_from_name(jl.at("activation").get<std::string>());
            lin.norm = jl.at("norm").get<double>();
            lin.weights = jl.at("weights").get<std::vector<double>>();
            lin.biases = jl.at("biases").get<std::vector<double>>();
            spec.layers.emplace_back(std::move(lin));
        } else if (type == "conv") {
            ConvLayerSpec conv;
            conv.c_in = jl.at("c_in").get<int>();
            conv.c_out = jl.at("c_out").get<int>();
            conv.kernel = jl.at("kernel").get<int>();
            conv.stride = jl.at("stride").get<int>();
            conv.activation = activation_from_name(jl.at("activation").get<std::string>());
            conv.norm = jl.at("norm").get<double>();
            conv.kernels = jl.at("kernels").get<std::vector<double>>();
            conv.biases = jl.at("biases").get<std::vector<double>>();
            spec.layers.emplace_back(std::move(conv));
        } else {
            throw FormatError("unknown layer type: " + type);
        }
    }
    spec.validate();
    return spec;
}

}  // namespace mcs
