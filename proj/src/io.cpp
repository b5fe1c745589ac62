#include "mcs/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace mcs {

void write_trace_csv(const IVTrace& trace, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open for writing: " + path.string());
    out << "t,v,i\n";
    char line[128];
    for (const IVSample& s : trace.samples) {
        std::snprintf(line, sizeof line, "%.12e,%.12e,%.12e\n", s.t, s.v, s.i);
        out << line;
    }
}

IVTrace read_trace_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open trace: " + path.string());
    std::string header;
    if (!std::getline(in, header) || header.rfind("t,v,i", 0) != 0)
        throw FormatError("trace csv missing `t,v,i` header: " + path.string());

    IVTrace trace;
    std::string line;
    int lineno = 1;
    double prev_t = -std::numeric_limits<double>::infinity();
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        IVSample s;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &s.t, &s.v, &s.i) != 3)
            throw FormatError("bad trace row at line " + std::to_string(lineno));
        if (s.t <= prev_t)
            throw FormatError("non-increasing time at line " + std::to_string(lineno));
        prev_t = s.t;
        trace.samples.push_back(s);
    }
    if (trace.samples.empty()) throw FormatError("empty trace: " + path.string());

    for (const IVSample& s : trace.samples)
        trace.amplitude = std::max(trace.amplitude, std::abs(s.v));
    // cycle count = number of positive peaks near the amplitude
    const double peak_level = 0.9 * trace.amplitude;
    bool above = false;
    for (const IVSample& s : trace.samples) {
        if (!above && s.v >= peak_level) {
            ++trace.cycles;
            above = true;
        } else if (above && s.v < peak_level) {
            above = false;
        }
    }
    if (trace.cycles > 0 && trace.samples.size() > 1) {
        // the first sample sits one step after t=0, so stretch the span by
        // n/(n-1) to recover the full duration
        const double span = (trace.samples.back().t - trace.samples.front().t) *
                            trace.samples.size() / (trace.samples.size() - 1.0);
        // a full triangle cycle spans 4 ramp legs of one period each
        const double period = span / (4.0 * trace.cycles);
        if (period > 0) trace.ramp_rate = trace.amplitude / period;
    }
    return trace;
}

void write_params_json(const DeviceParams& p, const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    for (const ParamField& f : param_fields()) j[f.name] = p.*(f.member);
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open for writing: " + path.string());
    out << j.dump(2) << '\n';
}

DeviceParams read_params_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open params: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad params json " + path.string() + ": " + e.what());
    }
    DeviceParams p;
    for (const ParamField& f : param_fields()) {
        if (!j.contains(f.name))
            throw FormatError(std::string("missing param: ") + f.name);
        if (!j[f.name].is_number())
            throw FormatError(std::string("param not a number: ") + f.name);
        p.*(f.member) = j[f.name].get<double>();
    }
    p.validate();
    return p;
}

std::map<std::string, std::string> read_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open config: " + path.string());
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        if (!key.empty()) kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

std::string params_fingerprint(const DeviceParams& p) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    auto mix = [&hash](const void* data, std::size_t n) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t k = 0; k < n; ++k) {
            hash ^= bytes[k];
            hash *= 0x100000001b3ULL;
        }
    };
    for (const ParamField& f : param_fields()) {
        const double v = p.*(f.member);
        mix(&v, sizeof v);
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

}  // namespace mcs
