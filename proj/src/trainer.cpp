#include "mcs/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "mcs/io.hpp"

namespace mcs {

Architecture architecture_from_name(const std::string& name) {
    if (name == "fc_simple") return Architecture::FcSimple;
    if (name == "fc_double") return Architecture::FcDouble;
    if (name == "cv_simple") return Architecture::CvSimple;
    if (name == "cv_double") return Architecture::CvDouble;
    if (name == "fc_double_sigmoid") return Architecture::FcDoubleSigmoid;
    throw std::invalid_argument("unknown architecture: " + name);
}

const char* architecture_name(Architecture a) {
    switch (a) {
        case Architecture::FcSimple: return "fc_simple";
        case Architecture::FcDouble: return "fc_double";
        case Architecture::CvSimple: return "cv_simple";
        case Architecture::CvDouble: return "cv_double";
        case Architecture::FcDoubleSigmoid: return "fc_double_sigmoid";
    }
    return "fc_simple";
}

// --- dataset ------------------------------------------------------------

namespace {

std::uint32_t read_be32(std::ifstream& in, const char* what) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw FormatError(std::string("truncated idx header: ") + what);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw FormatError("cannot open images: " + images_path.string());
    if (read_be32(img, "image magic") != 0x00000803)
        throw FormatError("bad image magic in " + images_path.string());
    const std::uint32_t n = read_be32(img, "count");
    const std::uint32_t rows = read_be32(img, "rows");
    const std::uint32_t cols = read_be32(img, "cols");
    if (rows != cols) throw FormatError("non-square idx images unsupported");

    Dataset ds;
    ds.side = static_cast<int>(rows);
    ds.channels = 1;
    const std::size_t total = std::size_t(n) * rows * cols;
    std::vector<unsigned char> raw(total);
    if (!img.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(total)))
        throw FormatError("truncated image payload in " + images_path.string());
    ds.images.resize(total);
    for (std::size_t k = 0; k < total; ++k)
        ds.images[k] = static_cast<float>(raw[k]) / 255.0f;

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw FormatError("cannot open labels: " + labels_path.string());
    if (read_be32(lab, "label magic") != 0x00000801)
        throw FormatError("bad label magic in " + labels_path.string());
    if (read_be32(lab, "label count") != n)
        throw FormatError("label count does not match image count");
    ds.labels.resize(n);
    if (!lab.read(reinterpret_cast<char*>(ds.labels.data()), n))
        throw FormatError("truncated label payload in " + labels_path.string());
    for (std::uint8_t v : ds.labels)
        if (v > 9) throw FormatError("label outside 0..9");
    return ds;
}

// --- Lanczos-3 resampling ----------------------------------------------

namespace {

double lanczos3(double x) {
    if (x == 0.0) return 1.0;
    if (std::abs(x) >= 3.0) return 0.0;
    const double pix = 3.141592653589793238462643383279 * x;
    return 3.0 * std::sin(pix) * std::sin(pix / 3.0) / (pix * pix);
}

struct Tap {
    int first;
    std::vector<double> weights;
};

std::vector<Tap> make_taps(int src, int dst) {
    const double scale = static_cast<double>(src) / dst;
    const double support = 3.0 * std::max(scale, 1.0);
    std::vector<Tap> taps(dst);
    for (int x = 0; x < dst; ++x) {
        const double center = (x + 0.5) * scale - 0.5;
        const int lo = std::max(0, static_cast<int>(std::ceil(center - support)));
        const int hi = std::min(src - 1, static_cast<int>(std::floor(center + support)));
        Tap& tap = taps[x];
        tap.first = lo;
        double sum = 0.0;
        for (int j = lo; j <= hi; ++j) {
            const double w = lanczos3((j - center) / std::max(scale, 1.0));
            tap.weights.push_back(w);
            sum += w;
        }
        if (sum != 0.0)
            for (double& w : tap.weights) w /= sum;
    }
    return taps;
}

}  // namespace

std::vector<float> resize_image(const float* src, int src_side, int dst_side) {
    if (dst_side > src_side)
        throw std::invalid_argument("resize_image: upscaling not supported");
    const std::vector<Tap> taps = make_taps(src_side, dst_side);

    // horizontal pass then vertical pass
    std::vector<double> tmp(static_cast<std::size_t>(src_side) * dst_side);
    for (int y = 0; y < src_side; ++y)
        for (int x = 0; x < dst_side; ++x) {
            double acc = 0.0;
            const Tap& tap = taps[x];
            for (std::size_t k = 0; k < tap.weights.size(); ++k)
                acc += tap.weights[k] * src[y * src_side + tap.first + static_cast<int>(k)];
            tmp[static_cast<std::size_t>(y) * dst_side + x] = acc;
        }
    std::vector<float> out(static_cast<std::size_t>(dst_side) * dst_side);
    for (int x = 0; x < dst_side; ++x)
        for (int y = 0; y < dst_side; ++y) {
            double acc = 0.0;
            const Tap& tap = taps[y];
            for (std::size_t k = 0; k < tap.weights.size(); ++k)
                acc += tap.weights[k] *
                       tmp[(static_cast<std::size_t>(tap.first) + k) * dst_side + x];
            out[static_cast<std::size_t>(y) * dst_side + x] =
                static_cast<float>(std::clamp(acc, 0.0, 1.0));
        }
    return out;
}

Dataset resize_dataset(const Dataset& src, int dst_side) {
    Dataset out;
    out.side = dst_side;
    out.channels = src.channels;
    out.labels = src.labels;
    out.images.reserve(src.count() * dst_side * dst_side);
    for (std::size_t n = 0; n < src.count(); ++n) {
        const std::vector<float> img = resize_image(src.image(n), src.side, dst_side);
        out.images.insert(out.images.end(), img.begin(), img.end());
    }
    return out;
}

// --- forward / backward -------------------------------------------------

namespace {

double apply_activation(Activation act, double z) {
    switch (act) {
        case Activation::Identity: return z;
        case Activation::Relu: return z > 0.0 ? z : 0.0;
        case Activation::SigmoidTenth: return 0.1 / (1.0 + std::exp(-z));
    }
    return z;
}

double activation_grad(Activation act, double z) {
    switch (act) {
        case Activation::Identity: return 1.0;
        case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::SigmoidTenth: {
            const double s = 1.0 / (1.0 + std::exp(-z));
            return 0.1 * s * (1.0 - s);
        }
    }
    return 1.0;
}

struct LayerShape {
    int side = 0;  // 0 for flat linear outputs
    int channels = 1;
    int count = 0;
};

LayerShape input_shape(const NetworkSpec& spec) {
    return {spec.input_size, spec.input_channels,
            spec.input_channels * spec.input_size * spec.input_size};
}

LayerShape output_shape(const LayerSpec& layer, const LayerShape& in) {
    if (const auto* lin = std::get_if<LinearLayerSpec>(&layer))
        return {0, 1, lin->outputs};
    const auto& conv = std::get<ConvLayerSpec>(layer);
    const int f = fmap_size(in.side, conv.kernel, conv.stride);
    return {f, conv.c_out, conv.c_out * f * f};
}

struct ForwardCache {
    std::vector<std::vector<double>> activations;  // [layer+1], [0] = input
    std::vector<std::vector<double>> pre_act;      // z per layer
};

std::vector<double> forward_impl(const NetworkSpec& spec,
                                 const std::vector<double>& input,
                                 ForwardCache* cache) {
    LayerShape shape = input_shape(spec);
    if (input.size() != static_cast<std::size_t>(shape.count))
        throw std::invalid_argument("forward: input size mismatch");

    std::vector<double> x = input;
    if (cache) cache->activations.push_back(x);
    for (const LayerSpec& layer : spec.layers) {
        const LayerShape out_shape = output_shape(layer, shape);
        std::vector<double> z(out_shape.count, 0.0);
        Activation act;
        if (const auto* lin = std::get_if<LinearLayerSpec>(&layer)) {
            act = lin->activation;
            for (int q = 0; q < lin->outputs; ++q) {
                double acc = lin->biases[q];
                const double* w = lin->weights.data() + static_cast<std::size_t>(q) * lin->inputs;
                for (int j = 0; j < lin->inputs; ++j) acc += w[j] * x[j];
                z[q] = lin->norm * acc;
            }
        } else {
            const auto& conv = std::get<ConvLayerSpec>(layer);
            act = conv.activation;
            const int f = out_shape.side, k = conv.kernel, s = conv.stride;
            const int in_side = shape.side;
            for (int co = 0; co < conv.c_out; ++co)
                for (int i = 0; i < f; ++i)
                    for (int j = 0; j < f; ++j) {
                        double acc = conv.biases[co];
                        for (int ci = 0; ci < conv.c_in; ++ci)
                            for (int ki = 0; ki < k; ++ki)
                                for (int kj = 0; kj < k; ++kj)
                                    acc += x[(static_cast<std::size_t>(ci) * in_side +
                                              i * s + ki) * in_side + j * s + kj] *
                                           conv.kern(co, ci, ki, kj);
                        z[(static_cast<std::size_t>(co) * f + i) * f + j] = conv.norm * acc;
                    }
        }
        std::vector<double> a(z.size());
        for (std::size_t q = 0; q < z.size(); ++q) a[q] = apply_activation(act, z[q]);
        if (cache) {
            cache->pre_act.push_back(z);
            cache->activations.push_back(a);
        }
        x = std::move(a);
        shape = out_shape;
    }
    return x;
}

}  // namespace

std::vector<double> forward(const NetworkSpec& spec,
                            const std::vector<double>& input_voltages) {
    return forward_impl(spec, input_voltages, nullptr);
}

void clip(NetworkSpec& spec, double weight_bound, double bias_bound) {
    for (LayerSpec& layer : spec.layers) {
        auto clamp_all = [](std::vector<double>& v, double bound) {
            for (double& x : v) x = std::clamp(x, -bound, bound);
        };
        if (auto* lin = std::get_if<LinearLayerSpec>(&layer)) {
            clamp_all(lin->weights, weight_bound);
            clamp_all(lin->biases, bias_bound);
        } else {
            auto& conv = std::get<ConvLayerSpec>(layer);
            clamp_all(conv.kernels, weight_bound);
            clamp_all(conv.biases, bias_bound);
        }
    }
}

NetworkSpec make_network(const TrainConfig& cfg) {
    if (cfg.input_size != 12 && cfg.input_size != 16)
        throw std::invalid_argument("input size must be 12 or 16");

    NetworkSpec spec;
    spec.input_size = cfg.input_size;
    spec.input_channels = 1;
    spec.output_neurons = 10;

    const int n_in = cfg.input_size * cfg.input_size;
    auto linear = [&](int in, int out, Activation act, double norm) {
        LinearLayerSpec l;
        l.inputs = in;
        l.outputs = out;
        l.activation = act;
        l.norm = norm;
        l.weights.assign(static_cast<std::size_t>(in) * out, 0.0);
        l.biases.assign(out, 0.0);
        return l;
    };
    auto conv = [&](int ci, int co) {
        ConvLayerSpec c;
        c.c_in = ci;
        c.c_out = co;
        c.kernel = 3;
        c.stride = 2;
        c.activation = Activation::Relu;
        c.norm = cfg.scale_relu;
        c.kernels.assign(static_cast<std::size_t>(co) * ci * 9, 0.0);
        c.biases.assign(co, 0.0);
        return c;
    };

    switch (cfg.architecture) {
        case Architecture::FcSimple:
            spec.layers.emplace_back(linear(n_in, 10, Activation::Identity, cfg.scale_out));
            break;
        case Architecture::FcDouble:
            spec.layers.emplace_back(linear(n_in, 20, Activation::Relu, cfg.scale_relu));
            spec.layers.emplace_back(linear(20, 10, Activation::Identity, cfg.scale_out));
            break;
        case Architecture::CvSimple: {
            spec.layers.emplace_back(conv(1, 3));
            const int f = fmap_size(cfg.input_size, 3, 2);
            spec.layers.emplace_back(linear(3 * f * f, 10, Activation::Identity, cfg.scale_out));
            break;
        }
        case Architecture::CvDouble: {
            spec.layers.emplace_back(conv(1, 3));
            const int f1 = fmap_size(cfg.input_size, 3, 2);
            spec.layers.emplace_back(conv(3, 6));
            const int f2 = fmap_size(f1, 3, 2);
            spec.layers.emplace_back(linear(6 * f2 * f2, 10, Activation::Identity, cfg.scale_out));
            break;
        }
        case Architecture::FcDoubleSigmoid:
            spec.layers.emplace_back(
                linear(n_in, 20, Activation::SigmoidTenth, cfg.scale_sigmoid));
            spec.layers.emplace_back(linear(20, 10, Activation::Identity, cfg.scale_out));
            break;
    }

    Rng rng = Rng(cfg.seed).derive(0x171A17);
    for (LayerSpec& layer : spec.layers) {
        auto init_all = [&](std::vector<double>& v, double std_dev) {
            for (double& x : v) x = rng.gaussian() * std_dev;
        };
        if (auto* lin = std::get_if<LinearLayerSpec>(&layer)) {
            init_all(lin->weights, cfg.init_std_w);
            init_all(lin->biases, cfg.init_std_b);
        } else {
            auto& c = std::get<ConvLayerSpec>(layer);
            init_all(c.kernels, cfg.init_std_w);
            init_all(c.biases, cfg.init_std_b);
        }
    }
    clip(spec, cfg.weight_bound, cfg.bias_bound);
    spec.validate();
    return spec;
}

namespace {

struct Gradients {
    // [layer][weights..., biases...] matching the layer parameter layout
    std::vector<std::vector<double>> values;

    static Gradients zeros_like(const NetworkSpec& spec) {
        Gradients g;
        for (const LayerSpec& layer : spec.layers) {
            if (const auto* lin = std::get_if<LinearLayerSpec>(&layer))
                g.values.emplace_back(lin->weights.size() + lin->biases.size(), 0.0);
            else {
                const auto& c = std::get<ConvLayerSpec>(layer);
                g.values.emplace_back(c.kernels.size() + c.biases.size(), 0.0);
            }
        }
        return g;
    }
};

/// Softmax cross-entropy loss and accumulated parameter gradients for one
/// example. Returns the loss.
double backward(const NetworkSpec& spec, const ForwardCache& cache, int label,
                Gradients& grads) {
    const std::vector<double>& scores = cache.activations.back();
    const double zmax = *std::max_element(scores.begin(), scores.end());
    double denom = 0.0;
    for (double s : scores) denom += std::exp(s - zmax);
    const double loss = -(scores[label] - zmax - std::log(denom));

    std::vector<double> da(scores.size());
    for (std::size_t q = 0; q < scores.size(); ++q) {
        const double p = std::exp(scores[q] - zmax) / denom;
        da[q] = p - (static_cast<int>(q) == label ? 1.0 : 0.0);
    }

    LayerShape shape = input_shape(spec);
    std::vector<LayerShape> in_shapes;
    for (const LayerSpec& layer : spec.layers) {
        in_shapes.push_back(shape);
        shape = output_shape(layer, shape);
    }

    for (int l = static_cast<int>(spec.layers.size()) - 1; l >= 0; --l) {
        const std::vector<double>& x = cache.activations[l];
        const std::vector<double>& z = cache.pre_act[l];
        std::vector<double>& g = grads.values[l];
        std::vector<double> dx(x.size(), 0.0);

        if (const auto* lin = std::get_if<LinearLayerSpec>(&spec.layers[l])) {
            for (int q = 0; q < lin->outputs; ++q) {
                const double dz =
                    da[q] * activation_grad(lin->activation, z[q]) * lin->norm;
                if (dz == 0.0) continue;
                const std::size_t row = static_cast<std::size_t>(q) * lin->inputs;
                const double* w = lin->weights.data() + row;
                for (int j = 0; j < lin->inputs; ++j) {
                    g[row + j] += dz * x[j];
                    dx[j] += dz * w[j];
                }
                g[lin->weights.size() + q] += dz;
            }
        } else {
            const auto& conv = std::get<ConvLayerSpec>(spec.layers[l]);
            const int f = output_shape(spec.layers[l], in_shapes[l]).side;
            const int k = conv.kernel, s = conv.stride, in_side = in_shapes[l].side;
            for (int co = 0; co < conv.c_out; ++co)
                for (int i = 0; i < f; ++i)
                    for (int j = 0; j < f; ++j) {
                        const std::size_t q = (static_cast<std::size_t>(co) * f + i) * f + j;
                        const double dz =
                            da[q] * activation_grad(conv.activation, z[q]) * conv.norm;
                        if (dz == 0.0) continue;
                        for (int ci = 0; ci < conv.c_in; ++ci)
                            for (int ki = 0; ki < k; ++ki)
                                for (int kj = 0; kj < k; ++kj) {
                                    const std::size_t xi =
                                        (static_cast<std::size_t>(ci) * in_side + i * s + ki) *
                                            in_side + j * s + kj;
                                    const std::size_t wi =
                                        ((static_cast<std::size_t>(co) * conv.c_in + ci) * k +
                                         ki) * k + kj;
                                    g[wi] += dz * x[xi];
                                    dx[xi] += dz * conv.kernels[wi];
                                }
                        g[conv.kernels.size() + co] += dz;
                    }
        }
        da = std::move(dx);
    }
    return loss;
}

void sgd_update(NetworkSpec& spec, const Gradients& grads, Gradients& velocity,
                const TrainConfig& cfg, double batch_scale) {
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        auto update = [&](std::vector<double>& params, std::size_t offset) {
            for (std::size_t k = 0; k < params.size(); ++k) {
                double& v = velocity.values[l][offset + k];
                v = cfg.momentum * v -
                    cfg.learning_rate * grads.values[l][offset + k] * batch_scale;
                params[k] += v;
            }
        };
        if (auto* lin = std::get_if<LinearLayerSpec>(&spec.layers[l])) {
            update(lin->weights, 0);
            update(lin->biases, lin->weights.size());
        } else {
            auto& conv = std::get<ConvLayerSpec>(spec.layers[l]);
            update(conv.kernels, 0);
            update(conv.biases, conv.kernels.size());
        }
    }
}

std::vector<double> voltages_of(const Dataset& data, std::size_t idx) {
    const float* img = data.image(idx);
    const std::size_t n = static_cast<std::size_t>(data.channels) * data.side * data.side;
    std::vector<double> v(n);
    for (std::size_t k = 0; k < n; ++k) v[k] = to_voltage(img[k]);
    return v;
}

}  // namespace

double evaluate_digital(const NetworkSpec& spec, const Dataset& data,
                        std::size_t limit) {
    const std::size_t n = std::min(limit, data.count());
    if (n == 0) throw std::invalid_argument("evaluate_digital: empty slice");
    std::size_t correct = 0;
    for (std::size_t idx = 0; idx < n; ++idx) {
        const std::vector<double> scores = forward(spec, voltages_of(data, idx));
        const auto arg = std::max_element(scores.begin(), scores.end());
        if (arg - scores.begin() == data.labels[idx]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(n);
}

TrainResult train(const TrainConfig& cfg, const Dataset& train_set,
                  const Dataset& test_set) {
    if (train_set.side != cfg.input_size || test_set.side != cfg.input_size)
        throw std::invalid_argument("train: dataset side does not match config");

    TrainResult result;
    result.spec = make_network(cfg);
    Gradients velocity = Gradients::zeros_like(result.spec);
    Rng shuffle_rng = Rng(cfg.seed).derive(0x5EED);

    std::vector<std::size_t> order(train_set.count());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates with the dedicated stream
        for (std::size_t k = order.size(); k > 1; --k) {
            const std::size_t j = static_cast<std::size_t>(shuffle_rng.uniform() * k);
            std::swap(order[k - 1], order[std::min(j, k - 1)]);
        }

        double epoch_loss = 0.0;
        for (std::size_t begin = 0; begin < order.size();
             begin += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
            Gradients grads = Gradients::zeros_like(result.spec);
            for (std::size_t k = begin; k < end; ++k) {
                ForwardCache cache;
                forward_impl(result.spec, voltages_of(train_set, order[k]), &cache);
                epoch_loss +=
                    backward(result.spec, cache, train_set.labels[order[k]], grads);
            }
            sgd_update(result.spec, grads, velocity, cfg,
                       1.0 / static_cast<double>(end - begin));
            clip(result.spec, cfg.weight_bound, cfg.bias_bound);
        }
        epoch_loss /= static_cast<double>(order.size());
        if (!std::isfinite(epoch_loss))
            throw NumericalError("training diverged at epoch " + std::to_string(epoch));

        const double acc = evaluate_digital(result.spec, test_set,
                                            static_cast<std::size_t>(cfg.eval_slice));
        result.log.push_back({epoch, epoch_loss, acc});
        result.digital_accuracy = acc;
    }
    return result;
}

void write_train_log(const std::vector<EpochLog>& log,
                     const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open for writing: " + path.string());
    out << "epoch,loss,accuracy\n";
    char line[96];
    for (const EpochLog& e : log) {
        std::snprintf(line, sizeof line, "%d,%.9e,%.6f\n", e.epoch, e.loss, e.accuracy);
        out << line;
    }
}

}  // namespace mcs
