#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mcs/netlist.hpp"
#include "mcs/rng.hpp"

namespace mcs {

/// The five hardware-constrained architectures.
enum class Architecture {
    FcSimple,
    FcDouble,
    CvSimple,
    CvDouble,
    FcDoubleSigmoid,
};

Architecture architecture_from_name(const std::string& name);
const char* architecture_name(Architecture a);

struct TrainConfig {
    Architecture architecture = Architecture::FcSimple;
    int input_size = 16;  // 12 or 16
    int epochs = 10;
    double learning_rate = 2e-8;
    double momentum = 0.9;
    int batch_size = 32;
    std::uint64_t seed = 1;
    int eval_slice = 1000;  // held-out test images scored each epoch

    double weight_bound = kWeightCeiling;
    double bias_bound = kBiasCeiling;
    double init_std_w = 2e-5;
    double init_std_b = 2e-6;
    double scale_relu = 1e4;
    double scale_sigmoid = 1e5;
    // Gain of the final layer. Its output drives the comparator rather than
    // another crossbar row, so it is not tied to the safe-voltage window and
    // gives cross-entropy headroom before the weight clip binds.
    double scale_out = 1e5;
};

struct Dataset {
    std::vector<float> images;  // [n][channels][side][side], values in [0,1]
    std::vector<std::uint8_t> labels;
    int side = 0;
    int channels = 1;

    [[nodiscard]] std::size_t count() const { return labels.size(); }
    [[nodiscard]] const float* image(std::size_t idx) const {
        return images.data() + idx * channels * side * side;
    }
};

/// Big-endian IDX containers (magic 0x803 for images, 0x801 for labels);
/// pixel bytes scaled to [0,1].
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path);

/// Separable Lanczos-3 resampling, output clamped to [0,1].
std::vector<float> resize_image(const float* src, int src_side, int dst_side);
Dataset resize_dataset(const Dataset& src, int dst_side);

/// Pixel [0,1] -> applied volts in the safe read window [-0.1, 0.1].
inline double to_voltage(double pixel) { return 0.2 * pixel - 0.1; }

/// Digital forward pass in hardware units: per layer z = norm * (W x + b),
/// activation applied, conv layers evaluated without padding.
std::vector<double> forward(const NetworkSpec& spec,
                            const std::vector<double>& input_voltages);

/// Clamp all weights to +/- weight_bound and biases to +/- bias_bound.
void clip(NetworkSpec& spec, double weight_bound = kWeightCeiling,
          double bias_bound = kBiasCeiling);

struct EpochLog {
    int epoch;
    double loss;
    double accuracy;  // on the held-out slice
};

struct TrainResult {
    NetworkSpec spec;
    double digital_accuracy = 0.0;
    std::vector<EpochLog> log;
};

/// Fresh architecture with seeded gaussian initialization, already clipped.
NetworkSpec make_network(const TrainConfig& cfg);

/// SGD with momentum on softmax cross-entropy; parameters clipped after
/// every update. Accuracy is scored on the first eval_slice test images.
TrainResult train(const TrainConfig& cfg, const Dataset& train_set,
                  const Dataset& test_set);

double evaluate_digital(const NetworkSpec& spec, const Dataset& data,
                        std::size_t limit);

void write_train_log(const std::vector<EpochLog>& log,
                     const std::filesystem::path& path);

}  // namespace mcs
