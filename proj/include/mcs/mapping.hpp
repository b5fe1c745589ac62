#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mcs/device.hpp"

namespace mcs {

/// Hard limits of the synapse hardware: conductance per memristor and the
/// effective bias current through the 0.1 V bias rail.
inline constexpr double kWeightCeiling = 8e-5;  // siemens
inline constexpr double kBiasCeiling = 8e-6;    // amperes
inline constexpr double kBiasVoltage = 0.1;     // volts

/// Monotone H -> composite conductance map sampled at a fixed read voltage
/// with variability off.
struct CalibrationTable {
    std::vector<double> h;  // strictly increasing, 0 to 1
    std::vector<double> g;  // siemens, non-decreasing
    double v_read = 0.1;
    std::string fingerprint;  // of the device params used

    [[nodiscard]] double max_g() const { return g.back(); }
    /// Forward interpolation h -> g.
    [[nodiscard]] double g_at(double h_query) const;
};

/// Signed weight encoded as a differential memristor pair. At most one of
/// the two states is nonzero.
struct SynapsePair {
    double h_plus = 0.0;
    double h_minus = 0.0;
};

CalibrationTable calibrate(const DeviceParams& p, int n = 10000,
                           double v_read = 0.1);

/// Inverse interpolation on the table; g = 0 maps to 0 and g above the
/// table maximum is a range error (weight exceeds the hardware ceiling).
double g_to_h(double g, const CalibrationTable& table);

SynapsePair weight_to_synapse(double w, const CalibrationTable& table);

/// Effective bias current -> conductance at the bias rail voltage, then a
/// regular weight conversion.
SynapsePair bias_to_synapse(double b, const CalibrationTable& table,
                            double bias_voltage = kBiasVoltage);

void write_calibration(const CalibrationTable& table,
                       const std::filesystem::path& csv_path);
CalibrationTable read_calibration(const std::filesystem::path& csv_path);

}  // namespace mcs
