#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "mcs/io.hpp"

using namespace mcs;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
    const fs::path dir = fs::temp_directory_path() / "mcs_io_tests";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("trace CSV round trip preserves samples and metadata") {
    DeviceParams p;
    const IVTrace t = simulate_ramp(p, 0.8, 0.1, 3, 11);
    const fs::path path = temp_file("trace.csv");
    write_trace_csv(t, path);

    const IVTrace back = read_trace_csv(path);
    REQUIRE(back.samples.size() == t.samples.size());
    for (std::size_t j = 0; j < t.samples.size(); ++j) {
        CHECK(back.samples[j].t == doctest::Approx(t.samples[j].t).epsilon(1e-11));
        CHECK(back.samples[j].v == doctest::Approx(t.samples[j].v).epsilon(1e-11));
        CHECK(back.samples[j].i == doctest::Approx(t.samples[j].i).epsilon(1e-11));
    }
    CHECK(back.cycles == 3);
    CHECK(back.amplitude == doctest::Approx(0.8).epsilon(1e-9));
    CHECK(back.ramp_rate == doctest::Approx(8.0).epsilon(1e-6));

    // idempotence: a second write of the parsed trace is byte-identical
    const fs::path path2 = temp_file("trace2.csv");
    write_trace_csv(back, path2);
    CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("trace CSV rejects malformed content") {
    const fs::path path = temp_file("bad.csv");
    std::ofstream(path) << "x,y,z\n1,2,3\n";
    CHECK_THROWS_AS(read_trace_csv(path), FormatError);
    std::ofstream(path) << "t,v,i\n0.1,0.2\n";
    CHECK_THROWS_AS(read_trace_csv(path), FormatError);
    CHECK_THROWS_AS(read_trace_csv(temp_file("missing.csv")), FormatError);
}

TEST_CASE("params JSON round trip is exact") {
    DeviceParams p;
    p.ion0 = 1.2345678901234e-5;
    p.vr0 = -0.0421;
    p.rext = 5000.0;
    const fs::path path = temp_file("params.json");
    write_params_json(p, path);
    const DeviceParams back = read_params_json(path);
    for (const ParamField& f : param_fields())
        CHECK(p.*(f.member) == back.*(f.member));
}

TEST_CASE("params JSON names every model parameter") {
    DeviceParams p;
    const fs::path path = temp_file("params_names.json");
    write_params_json(p, path);
    const std::string text = slurp(path);
    for (const ParamField& f : param_fields())
        CHECK(text.find(std::string("\"") + f.name + "\"") != std::string::npos);
}

TEST_CASE("params JSON rejects missing keys") {
    const fs::path path = temp_file("short.json");
    std::ofstream(path) << "{\"roff\": 10.0}\n";
    CHECK_THROWS_AS(read_params_json(path), FormatError);
    std::ofstream(path) << "not json";
    CHECK_THROWS_AS(read_params_json(path), FormatError);
}

TEST_CASE("config files parse key=value with comments") {
    const fs::path path = temp_file("cfg.txt");
    std::ofstream(path) << "# a comment\npopulation=32\n\n  decay = 0.97  # trailing\n";
    const auto cfg = read_config(path);
    CHECK(cfg.at("population") == "32");
    CHECK(cfg.at("decay") == "0.97");
    CHECK(cfg.size() == 2);
}

TEST_CASE("fingerprint tracks parameter changes") {
    DeviceParams p, q;
    CHECK(params_fingerprint(p) == params_fingerprint(q));
    CHECK(params_fingerprint(p).size() == 16);
    q.aon += 1e-12;
    CHECK(params_fingerprint(p) != params_fingerprint(q));
}
