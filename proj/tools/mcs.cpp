// mcs - memristor crossbar studio
//
// One binary wiring the device model, characterization, genetic fit,
// calibration, trainer, netlist compiler and analog engine into a
// reproducible artifact pipeline. All randomness flows from --seed.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mcs/characterize.hpp"
#include "mcs/engine.hpp"
#include "mcs/genetic.hpp"
#include "mcs/io.hpp"
#include "mcs/mapping.hpp"
#include "mcs/netlist.hpp"
#include "mcs/trainer.hpp"

namespace fs = std::filesystem;
using namespace mcs;

namespace {

// exit codes
constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kDataError = 2;
constexpr int kNumericalFailure = 3;

fs::path artifacts_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("MCS_ARTIFACTS_DIR"); env && *env) return env;
    return "artifacts";
}

DeviceParams load_params(const std::string& path) {
    if (path.empty()) return DeviceParams{};
    return read_params_json(path);
}

/// Published initial-guess parameter set used when no --init file is given.
DeviceParams initial_guess_params() {
    DeviceParams p;
    p.ion0 = 4.95e-6;
    p.ioff0 = 2.48e-6;
    p.aon = 1.71;
    p.aoff = 2.58;
    p.etas = 50.0;
    p.etar = 250.0;
    p.vs = 0.2;
    p.vr0 = -0.02;
    p.vt = 0.05;
    p.isb = 7e-6;
    p.gam = 0.35;
    p.sigion = 0.1;
    p.sigioff = 0.25;
    p.sigvr = 0.01;
    p.sigsb = 0.02;
    return p;
}

double config_num(const std::map<std::string, std::string>& cfg,
                  const std::string& key, double fallback) {
    auto it = cfg.find(key);
    if (it == cfg.end()) return fallback;
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size())
        throw FormatError("config value for '" + key + "' is not numeric: " + it->second);
    return v;
}

std::string rate_tag(double ramp_rate) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%g", ramp_rate);
    std::string tag(buf);
    for (char& c : tag)
        if (c == '.') c = 'p';
    return tag;
}

int cmd_simulate_device(const std::string& params_path, double amplitude,
                        std::vector<double> periods, int cycles,
                        std::uint64_t seed, int samples,
                        const std::string& artifacts_flag) {
    const DeviceParams params = load_params(params_path);
    if (periods.empty()) periods = {0.01, 0.1, 1.0};  // 80, 8, 0.8 V/s
    const fs::path dir = artifacts_dir(artifacts_flag);
    fs::create_directories(dir);
    for (double period : periods) {
        const IVTrace trace =
            simulate_ramp(params, amplitude, period, cycles, seed, samples);
        const fs::path out = dir / ("trace_" + rate_tag(trace.ramp_rate) + "Vs.csv");
        write_trace_csv(trace, out);
        std::cout << out.string() << ": " << trace.cycles << " cycles at "
                  << trace.ramp_rate << " V/s\n";
    }
    return kOk;
}

int cmd_characterize(const std::string& trace_path,
                     const std::vector<double>& read_voltages,
                     const std::string& artifacts_flag) {
    const IVTrace trace = read_trace_csv(trace_path);
    const CharacterizationReport report =
        read_voltages.empty() ? build_report(trace)
                              : build_report(trace, read_voltages);
    const fs::path dir = artifacts_dir(artifacts_flag) / "characterization";
    fs::create_directories(dir);
    write_report(report, dir);
    std::cout << "characterized " << report.v_set.size() << " cycles ("
              << report.dropped_cycles << " dropped) -> " << dir.string() << "\n";
    return kOk;
}

int cmd_fit(const std::vector<std::string>& ref_paths, const std::string& init_path,
            const std::string& config_path, std::uint64_t seed, int threads,
            const std::string& artifacts_flag) {
    std::vector<IVTrace> refs;
    refs.reserve(ref_paths.size());
    for (const std::string& path : ref_paths) refs.push_back(read_trace_csv(path));

    const DeviceParams init =
        init_path.empty() ? initial_guess_params() : read_params_json(init_path);

    GaConfig cfg;
    double bounds_factor = 5.0;
    if (!config_path.empty()) {
        const auto raw = read_config(config_path);
        cfg.population_size = static_cast<int>(config_num(raw, "population", cfg.population_size));
        cfg.generations = static_cast<int>(config_num(raw, "generations", cfg.generations));
        cfg.initial_mutation_scale =
            config_num(raw, "mutation_scale", cfg.initial_mutation_scale);
        cfg.mutation_decay = config_num(raw, "mutation_decay", cfg.mutation_decay);
        cfg.samples_per_cycle =
            static_cast<int>(config_num(raw, "samples_per_cycle", cfg.samples_per_cycle));
        cfg.draws_per_eval =
            static_cast<int>(config_num(raw, "draws_per_eval", cfg.draws_per_eval));
        bounds_factor = config_num(raw, "bounds_factor", bounds_factor);
    }
    cfg.bounds = GaConfig::bounds_around(init, bounds_factor);
    cfg.seed = seed;
    cfg.threads = threads;

    const FitResult result = fit(refs, init, cfg);

    const fs::path dir = artifacts_dir(artifacts_flag);
    fs::create_directories(dir);
    write_params_json(result.best, dir / "fitted_params.json");
    write_loss_history(result, dir / "fit_loss.csv");
    std::cout << "best loss " << result.best_loss << " after "
              << result.best_history.size() << " generations -> "
              << (dir / "fitted_params.json").string() << "\n";
    return kOk;
}

int cmd_calibrate(const std::string& params_path, int nodes, double v_read,
                  const std::string& artifacts_flag) {
    const DeviceParams params = load_params(params_path);
    const CalibrationTable table = calibrate(params, nodes, v_read);
    const fs::path dir = artifacts_dir(artifacts_flag);
    fs::create_directories(dir);
    const fs::path out = dir / "calibration.csv";
    write_calibration(table, out);
    std::cout << out.string() << ": " << table.h.size() << " nodes, max g "
              << table.max_g() << " S\n";
    return kOk;
}

int cmd_train(const std::string& arch_name, int input_size, const std::string& data_dir,
              int epochs, double lr, int batch, std::uint64_t seed, int eval_slice,
              double norm_hidden, double norm_out, const std::string& artifacts_flag) {
    TrainConfig cfg;
    cfg.architecture = architecture_from_name(arch_name);
    cfg.input_size = input_size;
    cfg.epochs = epochs;
    cfg.learning_rate = lr;
    cfg.batch_size = batch;
    cfg.seed = seed;
    cfg.eval_slice = eval_slice;
    cfg.scale_relu = norm_hidden;
    cfg.scale_out = norm_out;

    const fs::path data(data_dir);
    Dataset train_set = load_idx(data / "train-images-idx3-ubyte",
                                 data / "train-labels-idx1-ubyte");
    Dataset test_set = load_idx(data / "t10k-images-idx3-ubyte",
                                data / "t10k-labels-idx1-ubyte");
    if (train_set.side != input_size) train_set = resize_dataset(train_set, input_size);
    if (test_set.side != input_size) test_set = resize_dataset(test_set, input_size);

    const TrainResult result = train(cfg, train_set, test_set);

    const fs::path dir = artifacts_dir(artifacts_flag);
    fs::create_directories(dir);
    const std::string stem = std::string(architecture_name(cfg.architecture)) + "_" +
                             std::to_string(input_size);
    write_network_json(result.spec, dir / (stem + ".json"));
    write_train_log(result.log, dir / (stem + "_train.csv"));
    std::cout << stem << ": digital accuracy " << result.digital_accuracy
              << " on first " << eval_slice << " test images\n";
    return kOk;
}

int cmd_compile(const std::string& network_path, const std::string& calibration_path,
                bool inline_inputs, const std::string& artifacts_flag) {
    const NetworkSpec spec = read_network_json(network_path);
    const CalibrationTable table = read_calibration(calibration_path);
    const CrossbarNetlist netlist = build_netlist(spec, table, !inline_inputs);
    const std::string text = emit(netlist);
    if (parse(text) != netlist)
        throw ParseError("round-trip self-check failed on emitted netlist");

    const fs::path dir = artifacts_dir(artifacts_flag);
    fs::create_directories(dir);
    const fs::path out = dir / (fs::path(network_path).stem().string() + ".cir");
    std::ofstream file(out);
    if (!file) throw FormatError("cannot open for writing: " + out.string());
    file << text;
    std::cout << out.string() << ": " << netlist.memristors.size()
              << " memristors, " << netlist.neurons.size() << " neurons\n";
    return kOk;
}

int cmd_evaluate(const std::string& network_path, const std::string& calibration_path,
                 const std::string& params_path, const std::string& data_dir,
                 std::size_t limit, int runs, std::uint64_t seed, int threads,
                 const std::string& mode_name, int monte_carlo_runs, int image_index,
                 const std::string& artifacts_flag) {
    const NetworkSpec spec = read_network_json(network_path);
    const CalibrationTable table = read_calibration(calibration_path);
    const DeviceParams params = load_params(params_path);

    AnalogNetwork net = compile(spec, table, params);
    if (mode_name == "linear") net.mode = EngineMode::Linear;
    else if (mode_name == "nonlinear") net.mode = EngineMode::Nonlinear;
    else throw std::invalid_argument("--mode must be linear or nonlinear");

    const fs::path data(data_dir);
    Dataset test_set = load_idx(data / "t10k-images-idx3-ubyte",
                                data / "t10k-labels-idx1-ubyte");
    if (test_set.side != spec.input_size)
        test_set = resize_dataset(test_set, spec.input_size);

    const fs::path dir = artifacts_dir(artifacts_flag);
    fs::create_directories(dir);
    const std::string stem = fs::path(network_path).stem().string();

    if (monte_carlo_runs > 0) {
        if (image_index < 0 || static_cast<std::size_t>(image_index) >= test_set.count())
            throw std::invalid_argument("--image out of range for the test set");
        std::vector<double> input(static_cast<std::size_t>(net.input_count));
        const float* img = test_set.image(image_index);
        for (std::size_t k = 0; k < input.size(); ++k) input[k] = to_voltage(img[k]);
        const auto runs_out = monte_carlo(net, input, monte_carlo_runs, seed, threads);
        const fs::path mc = dir / (stem + "_mc.csv");
        write_monte_carlo_csv(runs_out, mc);
        std::cout << mc.string() << ": " << monte_carlo_runs << " runs on image "
                  << image_index << " (label " << int(test_set.labels[image_index])
                  << ")\n";
        return kOk;
    }

    const double digital = evaluate_digital(spec, test_set, limit);
    const EvaluationResult analog = evaluate(net, test_set, limit, runs, seed, threads);

    EvaluationReport report;
    report.architecture = stem;
    report.input_size = spec.input_size;
    report.digital_accuracy = digital;
    report.analog_accuracy = analog.accuracy;
    const fs::path out = dir / (stem + "_report.json");
    write_report_json(report, out);
    std::cout << out.string() << ": digital " << digital << ", analog "
              << analog.accuracy << ", ratio " << report.ratio() << " ("
              << analog.violation_runs << " inputs with safe-window violations)\n";
    return kOk;
}

int cmd_report(const std::vector<std::string>& report_paths) {
    std::printf("%-28s %6s %10s %10s %8s\n", "architecture", "input", "digital",
                "analog", "ratio");
    for (const std::string& path : report_paths) {
        const EvaluationReport r = read_report_json(path);
        std::printf("%-28s %6d %10.4f %10.4f %8.3f\n", r.architecture.c_str(),
                    r.input_size, r.digital_accuracy, r.analog_accuracy, r.ratio());
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"memristor crossbar studio: device model, fitting, netlist "
                 "compilation and analog inference"};
    app.require_subcommand(1);
    app.fallthrough();  // --seed/--artifacts are accepted after the subcommand too

    std::string artifacts;
    app.add_option("--artifacts", artifacts,
                   "artifacts directory (or MCS_ARTIFACTS_DIR; default ./artifacts)");

    std::uint64_t seed = 1;
    app.add_option("--seed", seed, "master seed; all sub-streams derive from it");

    // simulate-device
    auto* sim = app.add_subcommand("simulate-device", "triangle-ramp I-V traces");
    std::string sim_params;
    double amplitude = 0.8;
    std::vector<double> periods;
    int cycles = 1, samples = 1000;
    sim->add_option("--params", sim_params, "device parameter JSON");
    sim->add_option("--amplitude", amplitude, "ramp amplitude, volts");
    sim->add_option("--period", periods, "cycle period(s), seconds (default 0.01 0.1 1)");
    sim->add_option("--cycles", cycles, "cycles per trace");
    sim->add_option("--samples", samples, "samples per cycle");

    // characterize
    auto* chr = app.add_subcommand("characterize", "switching statistics from a trace");
    std::string trace_path;
    std::vector<double> read_voltages;
    chr->add_option("trace", trace_path, "trace CSV")->required();
    chr->add_option("--read-voltage", read_voltages, "read voltages (default 0.05 0.1)");

    // fit
    auto* fitc = app.add_subcommand("fit", "genetic parameter extraction");
    std::vector<std::string> ref_paths;
    std::string init_path, ga_config;
    int threads = 1;
    fitc->add_option("--refs", ref_paths, "reference trace CSVs")->required();
    fitc->add_option("--init", init_path, "initial parameter JSON (default: built-in guess)");
    fitc->add_option("--config", ga_config, "GA key=value config file");
    fitc->add_option("--threads", threads, "evaluation worker count");

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "H -> conductance table");
    std::string cal_params;
    int nodes = 10000;
    double v_read = 0.1;
    cal->add_option("--params", cal_params, "device parameter JSON");
    cal->add_option("--nodes", nodes, "table size");
    cal->add_option("--read-voltage", v_read, "calibration read voltage");

    // train
    auto* trn = app.add_subcommand("train", "constrained digital training");
    std::string arch = "fc_simple", data_dir = "data/mnist";
    int input_size = 16, epochs = 10, batch = 32, eval_slice = 1000;
    double lr = 2e-8;
    trn->add_option("--arch", arch,
                    "fc_simple | fc_double | cv_simple | cv_double | fc_double_sigmoid");
    trn->add_option("--input-size", input_size, "input side length (12 or 16)");
    trn->add_option("--data", data_dir, "IDX dataset directory");
    trn->add_option("--epochs", epochs, "training epochs");
    trn->add_option("--lr", lr, "learning rate");
    trn->add_option("--batch", batch, "minibatch size");
    trn->add_option("--eval-slice", eval_slice, "held-out test images scored per epoch");
    double norm_hidden = 1e4, norm_out = 1e5;
    trn->add_option("--norm-hidden", norm_hidden, "hidden-layer gain (R_f)");
    trn->add_option("--norm-out", norm_out, "output-layer gain");

    // compile
    auto* cmp = app.add_subcommand("compile", "network JSON -> crossbar netlist");
    std::string network_path, calibration_path;
    bool inline_inputs = false;
    cmp->add_option("--network", network_path, "network JSON")->required();
    cmp->add_option("--calibration", calibration_path, "calibration CSV")->required();
    cmp->add_flag("--inline-inputs", inline_inputs,
                  "emit zero-valued sources instead of input parameters");

    // evaluate
    auto* evl = app.add_subcommand("evaluate", "analog inference accuracy");
    std::string evl_network, evl_calibration, evl_params, evl_data = "data/mnist";
    std::size_t limit = 1000;
    int runs = 1, evl_threads = 1, mc_runs = 0, image_index = 0;
    std::string mode = "nonlinear";
    evl->add_option("--network", evl_network, "network JSON")->required();
    evl->add_option("--calibration", evl_calibration, "calibration CSV")->required();
    evl->add_option("--params", evl_params, "device parameter JSON");
    evl->add_option("--data", evl_data, "IDX dataset directory");
    evl->add_option("--limit", limit, "test images scored");
    evl->add_option("--runs", runs, "variability runs per input (majority vote)");
    evl->add_option("--threads", evl_threads, "worker count");
    evl->add_option("--mode", mode, "linear | nonlinear");
    evl->add_option("--monte-carlo", mc_runs, "repeat one image N times, write spread CSV");
    evl->add_option("--image", image_index, "test image index for --monte-carlo");

    // report
    auto* rep = app.add_subcommand("report", "render accuracy comparison table");
    std::vector<std::string> report_paths;
    rep->add_option("reports", report_paths, "report JSON files")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (sim->parsed())
            return cmd_simulate_device(sim_params, amplitude, periods, cycles, seed,
                                       samples, artifacts);
        if (chr->parsed()) return cmd_characterize(trace_path, read_voltages, artifacts);
        if (fitc->parsed())
            return cmd_fit(ref_paths, init_path, ga_config, seed, threads, artifacts);
        if (cal->parsed()) return cmd_calibrate(cal_params, nodes, v_read, artifacts);
        if (trn->parsed())
            return cmd_train(arch, input_size, data_dir, epochs, lr, batch, seed,
                             eval_slice, norm_hidden, norm_out, artifacts);
        if (cmp->parsed())
            return cmd_compile(network_path, calibration_path, inline_inputs, artifacts);
        if (evl->parsed())
            return cmd_evaluate(evl_network, evl_calibration, evl_params, evl_data,
                                limit, runs, seed, evl_threads, mode, mc_runs,
                                image_index, artifacts);
        if (rep->parsed()) return cmd_report(report_paths);
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumericalFailure;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDataError;
    }
    return kUsage;
}
