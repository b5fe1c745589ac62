#include "mcs/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "mcs/io.hpp"

namespace mcs {

double CalibrationTable::g_at(double h_query) const {
    if (h_query <= h.front()) return g.front();
    if (h_query >= h.back()) return g.back();
    const auto it = std::upper_bound(h.begin(), h.end(), h_query);
    const std::size_t k = static_cast<std::size_t>(it - h.begin());
    const double w = (h_query - h[k - 1]) / (h[k] - h[k - 1]);
    return g[k - 1] + w * (g[k] - g[k - 1]);
}

CalibrationTable calibrate(const DeviceParams& p, int n, double v_read) {
    if (n < 2) throw std::invalid_argument("calibrate: need at least 2 nodes");
    if (std::abs(v_read) > p.vt)
        throw std::invalid_argument("calibrate: v_read outside the dead zone");

    CalibrationTable table;
    table.v_read = v_read;
    table.fingerprint = params_fingerprint(p);
    table.h.reserve(n);
    table.g.reserve(n);
    for (int k = 0; k < n; ++k) {
        const double h = static_cast<double>(k) / (n - 1);
        table.h.push_back(h);
        table.g.push_back(composite_conductance(h, p, v_read));
    }
    return table;
}

double g_to_h(double g, const CalibrationTable& table) {
    if (g < 0.0) throw std::out_of_range("g_to_h: negative conductance");
    if (g == 0.0) return 0.0;
    if (g > table.max_g())
        throw std::out_of_range("g_to_h: conductance above the table maximum");
    if (g <= table.g.front()) return 0.0;  // below the device off floor

    const auto it = std::lower_bound(table.g.begin(), table.g.end(), g);
    std::size_t k = static_cast<std::size_t>(it - table.g.begin());
    if (table.g[k] == g) return table.h[k];
    const double ga = table.g[k - 1], gb = table.g[k];
    if (gb == ga) return table.h[k - 1];
    const double w = (g - ga) / (gb - ga);
    return table.h[k - 1] + w * (table.h[k] - table.h[k - 1]);
}

SynapsePair weight_to_synapse(double w, const CalibrationTable& table) {
    if (std::abs(w) > kWeightCeiling)
        throw std::out_of_range("weight above the 8e-5 S hardware ceiling");
    SynapsePair pair;
    if (w > 0.0)
        pair.h_plus = g_to_h(w, table);
    else if (w < 0.0)
        pair.h_minus = g_to_h(-w, table);
    return pair;
}

SynapsePair bias_to_synapse(double b, const CalibrationTable& table,
                            double bias_voltage) {
    if (std::abs(b) > kBiasCeiling)
        throw std::out_of_range("bias above the 8e-6 A ceiling");
    return weight_to_synapse(b / bias_voltage, table);
}

void write_calibration(const CalibrationTable& table,
                       const std::filesystem::path& csv_path) {
    std::ofstream out(csv_path);
    if (!out) throw FormatError("cannot open for writing: " + csv_path.string());
    out << "h,g\n";
    char line[64];
    for (std::size_t k = 0; k < table.h.size(); ++k) {
        std::snprintf(line, sizeof line, "%.12e,%.12e\n", table.h[k], table.g[k]);
        out << line;
    }

    nlohmann::ordered_json j;
    j["v_read"] = table.v_read;
    j["params_fingerprint"] = table.fingerprint;
    j["nodes"] = table.h.size();
    std::filesystem::path sidecar = csv_path;
    sidecar.replace_extension(".json");
    std::ofstream sout(sidecar);
    sout << j.dump(2) << '\n';
}

CalibrationTable read_calibration(const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw FormatError("cannot open calibration: " + csv_path.string());
    std::string header;
    if (!std::getline(in, header) || header.rfind("h,g", 0) != 0)
        throw FormatError("calibration csv missing `h,g` header");

    CalibrationTable table;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        double h, g;
        if (std::sscanf(line.c_str(), "%lf,%lf", &h, &g) != 2)
            throw FormatError("bad calibration row: " + line);
        if (!table.h.empty() && h <= table.h.back())
            throw FormatError("calibration h values must increase");
        table.h.push_back(h);
        table.g.push_back(g);
    }
    if (table.h.size() < 2) throw FormatError("calibration table too small");

    std::filesystem::path sidecar = csv_path;
    sidecar.replace_extension(".json");
    if (std::filesystem::exists(sidecar)) {
        std::ifstream sin(sidecar);
        nlohmann::json j;
        sin >> j;
        table.v_read = j.value("v_read", 0.1);
        table.fingerprint = j.value("params_fingerprint", "");
    }
    return table;
}

}  // namespace mcs
