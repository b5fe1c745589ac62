#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "mcs/device.hpp"

namespace mcs {

/// Thrown for malformed input files (bad CSV, bad magic, bad JSON shape).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Trace CSV with header `t,v,i`, one row per sample. On read, amplitude,
/// cycle count and ramp rate are inferred from the data.
void write_trace_csv(const IVTrace& trace, const std::filesystem::path& path);
IVTrace read_trace_csv(const std::filesystem::path& path);

/// Flat JSON object keyed by the model parameter names.
void write_params_json(const DeviceParams& p, const std::filesystem::path& path);
DeviceParams read_params_json(const std::filesystem::path& path);

/// key=value config files; '#' starts a comment.
std::map<std::string, std::string> read_config(const std::filesystem::path& path);

/// Short hex fingerprint of the parameter set (FNV-1a over the field values).
std::string params_fingerprint(const DeviceParams& p);

}  // namespace mcs
