#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "mcs/engine.hpp"
#include "mcs/io.hpp"

using namespace mcs;
namespace fs = std::filesystem;

namespace {

struct Fixture {
    DeviceParams params;
    CalibrationTable table;
    Fixture()
        : params(read_params_json("params/crossbar.json")),
          table(calibrate(params)) {}
};

const Fixture& fx() {
    static Fixture f;
    return f;
}

std::vector<double> random_input(int n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(n);
    for (double& x : v) x = 0.2 * rng.uniform() - 0.1;
    return v;
}

}  // namespace

TEST_CASE("compile mirrors the network structure") {
    NetworkSpec spec;
    spec.input_size = 6;
    spec.output_neurons = 2;
    ConvLayerSpec conv;
    conv.c_in = 1;
    conv.c_out = 2;
    conv.kernel = 3;
    conv.stride = 2;
    conv.kernels.assign(2 * 9, 1e-5);
    conv.biases.assign(2, 1e-7);
    spec.layers.emplace_back(conv);
    const int f = fmap_size(6, 3, 2);
    LinearLayerSpec head;
    head.inputs = 2 * f * f;
    head.outputs = 2;
    head.weights.assign(static_cast<std::size_t>(head.inputs) * 2, -2e-5);
    head.biases.assign(2, 0.0);
    spec.layers.emplace_back(head);

    const AnalogNetwork net = compile(spec, fx().table, fx().params);
    REQUIRE(net.layers.size() == 2);
    CHECK(net.input_count == 36);
    CHECK(net.layers[0].neurons.size() == static_cast<std::size_t>(2 * f * f));
    CHECK(net.layers[1].neurons.size() == 2);
    CHECK(net.synapse_count() ==
          static_cast<std::size_t>(2 * f * f) * (9 + 1) + 2u * (head.inputs + 1));

    // conv neuron (co=0, i=0, j=1), tap (ki=0, kj=0) reads pixel (0, 2)
    const AnalogNeuron& n01 = net.layers[0].neurons[1];
    REQUIRE(n01.synapses.size() == 9);
    CHECK(n01.synapses[0].input == 2);
    CHECK(n01.synapses[0].exact_w == 1e-5);
    // negative weights land on the minus device
    const AnalogNeuron& out0 = net.layers[1].neurons[0];
    CHECK(out0.synapses[0].pair.h_plus == 0.0);
    CHECK(out0.synapses[0].pair.h_minus > 0.0);
}

TEST_CASE("compile reports the offending coordinate for oversized weights") {
    NetworkSpec spec;
    spec.input_size = 1;
    spec.output_neurons = 1;
    LinearLayerSpec lin;
    lin.inputs = 1;
    lin.outputs = 1;
    lin.weights = {9e-5};  // above the ceiling
    lin.biases = {0.0};
    spec.layers.emplace_back(lin);
    try {
        compile(spec, fx().table, fx().params);
        FAIL("expected out_of_range");
    } catch (const std::out_of_range& e) {
        const std::string what = e.what();
        CHECK(what.find("layer 1") != std::string::npos);
        CHECK(what.find("output 0") != std::string::npos);
    }
}

TEST_CASE("linear exact mode reproduces the digital forward pass") {
    TrainConfig cfg;
    cfg.architecture = Architecture::FcDouble;
    cfg.input_size = 12;
    cfg.seed = 14;
    const NetworkSpec spec = make_network(cfg);
    AnalogNetwork net = compile(spec, fx().table, fx().params);
    net.mode = EngineMode::Linear;
    net.exact_conductance = true;

    for (std::uint64_t s = 0; s < 5; ++s) {
        const std::vector<double> input = random_input(144, 100 + s);
        const std::vector<double> digital = forward(spec, input);
        Rng rng(1);
        const RunResult rr = run(net, input, rng, false);
        REQUIRE(rr.outputs.size() == digital.size());
        for (std::size_t q = 0; q < digital.size(); ++q)
            CHECK(rr.outputs[q] ==
                  doctest::Approx(digital[q]).epsilon(1e-9));
        const auto arg = std::max_element(digital.begin(), digital.end());
        CHECK(rr.predicted == arg - digital.begin());
    }
}

TEST_CASE("run validates its inputs") {
    TrainConfig cfg;
    cfg.architecture = Architecture::FcSimple;
    cfg.input_size = 12;
    const AnalogNetwork net = compile(make_network(cfg), fx().table, fx().params);
    Rng rng(1);
    CHECK_THROWS_AS(run(net, std::vector<double>(10, 0.0), rng, false),
                    std::invalid_argument);
    std::vector<double> hot(144, 0.0);
    hot[3] = 0.2;  // outside the safe read window
    CHECK_THROWS_AS(run(net, hot, rng, false), std::invalid_argument);
}

TEST_CASE("hidden-layer excursions are recorded as violations") {
    NetworkSpec spec;
    spec.input_size = 1;
    spec.output_neurons = 1;
    LinearLayerSpec hidden;
    hidden.inputs = 1;
    hidden.outputs = 1;
    hidden.activation = Activation::Relu;
    hidden.norm = 1e5;  // drives the hidden node to 0.8 V
    hidden.weights = {8e-5};
    hidden.biases = {0.0};
    LinearLayerSpec out;
    out.inputs = 1;
    out.outputs = 1;
    out.norm = 1e4;
    out.weights = {1e-5};
    out.biases = {0.0};
    spec.layers.emplace_back(hidden);
    spec.layers.emplace_back(out);

    AnalogNetwork net = compile(spec, fx().table, fx().params);
    net.mode = EngineMode::Linear;
    net.exact_conductance = true;
    Rng rng(1);
    const RunResult rr = run(net, {0.1}, rng, false);
    REQUIRE(rr.violations.size() == 1);
    CHECK(rr.violations[0].layer == 1);
    CHECK(rr.violations[0].node == 0);
    CHECK(rr.violations[0].volts == doctest::Approx(0.8));

    // the final layer is a comparator input, never a safe-window violation
    const RunResult quiet = run(net, {0.001}, rng, false);
    CHECK(quiet.violations.empty());
}

TEST_CASE("monte carlo is deterministic and thread independent") {
    TrainConfig cfg;
    cfg.architecture = Architecture::FcSimple;
    cfg.input_size = 12;
    cfg.seed = 2;
    const AnalogNetwork net = compile(make_network(cfg), fx().table, fx().params);
    const std::vector<double> input = random_input(144, 7);

    const auto a = monte_carlo(net, input, 8, 99, 1);
    const auto b = monte_carlo(net, input, 8, 99, 3);
    REQUIRE(a.size() == 8);
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k].outputs == b[k].outputs);
        CHECK(a[k].predicted == b[k].predicted);
        CHECK(a[k].draw_fingerprint == b[k].draw_fingerprint);
    }
    // variability actually varies between runs
    CHECK(a[0].draw_fingerprint != a[1].draw_fingerprint);
    CHECK(a[0].outputs != a[1].outputs);
    CHECK_THROWS_AS(monte_carlo(net, input, 0, 1), std::invalid_argument);
}

TEST_CASE("dataset evaluation is worker-count independent") {
    TrainConfig cfg;
    cfg.architecture = Architecture::FcSimple;
    cfg.input_size = 12;
    cfg.seed = 3;
    const AnalogNetwork net = compile(make_network(cfg), fx().table, fx().params);

    Dataset ds;
    ds.side = 12;
    ds.channels = 1;
    Rng rng(5);
    ds.images.resize(6 * 144);
    for (float& p : ds.images) p = static_cast<float>(rng.uniform());
    ds.labels = {0, 1, 2, 3, 4, 5};

    const EvaluationResult a = evaluate(net, ds, 6, 3, 77, 1);
    const EvaluationResult b = evaluate(net, ds, 6, 3, 77, 4);
    CHECK(a.predictions == b.predictions);
    CHECK(a.accuracy == b.accuracy);
    CHECK(a.violation_runs == b.violation_runs);
    CHECK_THROWS_AS(evaluate(net, ds, 0, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(evaluate(net, ds, 6, 0, 1), std::invalid_argument);
}

TEST_CASE("timing and power estimates are closed-form") {
    const EstimatorInputs e;
    const TimingEstimate t = estimate_timing(e, {266, 10});
    CHECK(t.seconds == doctest::Approx(5.0 * 276 * 20e-12).epsilon(1e-12));
    CHECK(t.hertz == doctest::Approx(1.0 / (5.0 * 276 * 20e-12)).epsilon(1e-12));
    CHECK(estimate_power(e, 30) == doctest::Approx(7.54e-4 * 5.0 * 30));
    CHECK_THROWS_AS(estimate_timing(e, {}), std::invalid_argument);
    CHECK_THROWS_AS(estimate_timing(e, {5, 0}), std::invalid_argument);
    CHECK_THROWS_AS(estimate_power(e, 0), std::invalid_argument);
}

TEST_CASE("evaluation report JSON round trip") {
    EvaluationReport r;
    r.architecture = "fc_double";
    r.input_size = 16;
    r.digital_accuracy = 0.914;
    r.analog_accuracy = 0.912;
    const fs::path path = fs::temp_directory_path() / "mcs_report.json";
    write_report_json(r, path);
    const EvaluationReport back = read_report_json(path);
    CHECK(back.architecture == "fc_double");
    CHECK(back.input_size == 16);
    CHECK(back.digital_accuracy == 0.914);
    CHECK(back.analog_accuracy == 0.912);
    CHECK(back.ratio() == doctest::Approx(0.912 / 0.914));
    std::ofstream(path) << "not json";
    CHECK_THROWS_AS(read_report_json(path), FormatError);
}

TEST_CASE("monte carlo CSV layout") {
    std::vector<RunResult> runs(2);
    runs[0].outputs.assign(10, 0.5);
    runs[0].predicted = 4;
    runs[1].outputs.assign(10, -0.25);
    runs[1].predicted = 0;
    const fs::path path = fs::temp_directory_path() / "mcs_mc.csv";
    write_monte_carlo_csv(runs, path);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line ==
          "run,class0,class1,class2,class3,class4,class5,class6,class7,class8,"
          "class9,predicted");
    std::getline(in, line);
    CHECK(line.rfind("0,5.000000000e-01", 0) == 0);
    CHECK(line.substr(line.size() - 2) == ",4");
    int rows = 1;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 2);
}
