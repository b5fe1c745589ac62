#pragma once

#include <filesystem>
#include <vector>

#include "mcs/device.hpp"

namespace mcs {

/// Extraction failures on degenerate branches.
class ExtractionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One (v, |i|) point of a sweep branch. Currents are stored as absolute
/// values throughout this module.
struct BranchPoint {
    double v;
    double abs_i;
};
using Branch = std::vector<BranchPoint>;

/// Branches of one triangle cycle, split at voltage extrema and
/// zero-crossings. set_branch rises 0 -> +A, return_branch falls +A -> 0
/// (the LRS read segment), reset_branch falls 0 -> -A.
struct CycleBranches {
    Branch set_branch;
    Branch return_branch;
    Branch reset_branch;
};

struct SplitResult {
    std::vector<CycleBranches> cycles;
    int dropped = 0;  // truncated trailing cycles
};

SplitResult split_cycles(const IVTrace& trace);

/// Set point: maximum perpendicular distance to the chord joining the first
/// and last branch points, on min-max normalized axes. Ties break toward
/// the lowest voltage.
double extract_set_voltage(const Branch& branch);

/// Reset point: sample of maximum |i|; ties break toward the smallest |v|.
double extract_reset_voltage(const Branch& branch);

/// Linear interpolation of |i| at v_read between the bracketing samples.
/// Refuses to extrapolate outside the branch voltage range.
double read_current_at(const Branch& branch, double v_read);

struct CdfPoint {
    double value;
    double probability;  // rank / (n + 1)
};

struct CharacterizationReport {
    std::vector<double> v_set;    // per cycle
    std::vector<double> v_reset;  // per cycle
    std::vector<CdfPoint> set_cdf;
    std::vector<CdfPoint> reset_cdf;
    std::vector<double> read_voltages;
    // indexed [read voltage][cycle]
    std::vector<std::vector<double>> i_hrs;
    std::vector<std::vector<double>> i_lrs;
    std::vector<std::vector<double>> ratio;  // lrs / hrs
    int dropped_cycles = 0;
};

/// Empirical CDF with plotting positions rank/(n+1).
std::vector<CdfPoint> empirical_cdf(std::vector<double> values);

CharacterizationReport build_report(const IVTrace& trace,
                                    const std::vector<double>& read_voltages = {0.05, 0.1});

/// CSV bundle (one file per series) plus a JSON summary of per-cycle scalars.
void write_report(const CharacterizationReport& report,
                  const std::filesystem::path& out_dir);

}  // namespace mcs
