#include "mcs/characterize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "mcs/io.hpp"

namespace mcs {

namespace {

struct Segment {
    std::size_t begin;  // inclusive
    std::size_t end;    // inclusive
    bool rising;
};

/// Monotone sweep segments between applied-voltage turning points.
std::vector<Segment> monotone_segments(const std::vector<IVSample>& s) {
    std::vector<Segment> segs;
    if (s.size() < 2) return segs;
    std::size_t begin = 0;
    int dir = 0;
    for (std::size_t j = 1; j < s.size(); ++j) {
        const double dv = s[j].v - s[j - 1].v;
        int d = dv > 0 ? 1 : (dv < 0 ? -1 : 0);
        if (d == 0) continue;
        if (dir == 0) {
            dir = d;
        } else if (d != dir) {
            segs.push_back({begin, j - 1, dir > 0});
            begin = j - 1;
            dir = d;
        }
    }
    if (dir != 0) segs.push_back({begin, s.size() - 1, dir > 0});
    return segs;
}

}  // namespace

SplitResult split_cycles(const IVTrace& trace) {
    const auto& s = trace.samples;
    SplitResult result;
    if (s.empty()) throw std::invalid_argument("split_cycles: empty trace");

    double amplitude = 0.0;
    for (const IVSample& x : s) amplitude = std::max(amplitude, std::abs(x.v));
    const double full = 0.5 * amplitude;  // a sweep must at least reach this

    const std::vector<Segment> segs = monotone_segments(s);
    std::size_t k = 0;
    while (k < segs.size()) {
        if (!segs[k].rising) {  // leading or stray falling segment
            ++result.dropped;
            ++k;
            continue;
        }
        const Segment& up = segs[k];
        if (k + 1 >= segs.size()) {
            // A trailing rise that reached the peak lost its reset sweep; a
            // sub-threshold one is just the last cycle's return to zero.
            if (s[up.end].v >= full) ++result.dropped;
            break;
        }
        const Segment& down = segs[k + 1];
        const bool peak_ok = s[up.end].v >= full;
        const bool trough_ok = s[down.end].v <= -full;
        if (!peak_ok || !trough_ok) {
            ++result.dropped;
            k += peak_ok ? 2 : 1;
            continue;
        }

        CycleBranches cyc;
        for (std::size_t j = up.begin; j <= up.end; ++j)
            if (s[j].v >= 0.0) cyc.set_branch.push_back({s[j].v, std::abs(s[j].i)});
        for (std::size_t j = down.begin; j <= down.end; ++j) {
            if (s[j].v >= 0.0)
                cyc.return_branch.push_back({s[j].v, std::abs(s[j].i)});
            if (s[j].v <= 0.0)
                cyc.reset_branch.push_back({s[j].v, std::abs(s[j].i)});
        }
        result.cycles.push_back(std::move(cyc));
        k += 2;  // the trailing rise back to 0 starts the next cycle's segment
    }
    return result;
}

double extract_set_voltage(const Branch& branch) {
    if (branch.size() < 3)
        throw ExtractionError("set extraction needs at least 3 points");

    double vmin = branch.front().v, vmax = branch.front().v;
    double imin = branch.front().abs_i, imax = branch.front().abs_i;
    for (const BranchPoint& p : branch) {
        vmin = std::min(vmin, p.v);
        vmax = std::max(vmax, p.v);
        imin = std::min(imin, p.abs_i);
        imax = std::max(imax, p.abs_i);
    }
    const double vspan = vmax - vmin, ispan = imax - imin;
    auto norm = [&](const BranchPoint& p) {
        return std::pair<double, double>{
            vspan > 0 ? (p.v - vmin) / vspan : 0.0,
            ispan > 0 ? (p.abs_i - imin) / ispan : 0.0};
    };

    const auto [ax, ay] = norm(branch.front());
    const auto [bx, by] = norm(branch.back());
    const double chord = std::hypot(bx - ax, by - ay);
    if (chord == 0.0)
        throw ExtractionError("degenerate chord: branch endpoints coincide");

    double best_dist = -1.0, best_v = branch.front().v;
    for (const BranchPoint& p : branch) {
        const auto [px, py] = norm(p);
        const double dist =
            std::abs((bx - ax) * (ay - py) - (ax - px) * (by - ay)) / chord;
        if (dist > best_dist) {  // strict: ties keep the lowest voltage
            best_dist = dist;
            best_v = p.v;
        }
    }
    return best_v;
}

double extract_reset_voltage(const Branch& branch) {
    if (branch.empty())
        throw ExtractionError("reset extraction on empty branch");
    double best_i = -1.0, best_v = 0.0;
    for (const BranchPoint& p : branch) {
        if (p.abs_i > best_i ||
            (p.abs_i == best_i && std::abs(p.v) < std::abs(best_v))) {
            best_i = p.abs_i;
            best_v = p.v;
        }
    }
    return best_v;
}

double read_current_at(const Branch& branch, double v_read) {
    for (std::size_t j = 0; j + 1 < branch.size(); ++j) {
        const double va = branch[j].v, vb = branch[j + 1].v;
        if ((v_read - va) * (v_read - vb) <= 0.0) {
            if (va == vb) return branch[j].abs_i;
            const double w = (v_read - va) / (vb - va);
            return branch[j].abs_i + w * (branch[j + 1].abs_i - branch[j].abs_i);
        }
    }
    if (branch.size() == 1 && branch.front().v == v_read) return branch.front().abs_i;
    throw std::out_of_range("read voltage outside branch range");
}

std::vector<CdfPoint> empirical_cdf(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    std::vector<CdfPoint> cdf;
    cdf.reserve(values.size());
    const double n = static_cast<double>(values.size());
    for (std::size_t r = 0; r < values.size(); ++r)
        cdf.push_back({values[r], static_cast<double>(r + 1) / (n + 1.0)});
    return cdf;
}

CharacterizationReport build_report(const IVTrace& trace,
                                    const std::vector<double>& read_voltages) {
    const SplitResult split = split_cycles(trace);
    if (split.cycles.empty())
        throw std::invalid_argument("build_report: trace has no full cycle");

    CharacterizationReport report;
    report.read_voltages = read_voltages;
    report.dropped_cycles = split.dropped;
    report.i_hrs.resize(read_voltages.size());
    report.i_lrs.resize(read_voltages.size());
    report.ratio.resize(read_voltages.size());

    for (const CycleBranches& cyc : split.cycles) {
        report.v_set.push_back(extract_set_voltage(cyc.set_branch));
        report.v_reset.push_back(extract_reset_voltage(cyc.reset_branch));
        for (std::size_t r = 0; r < read_voltages.size(); ++r) {
            const double hrs = read_current_at(cyc.set_branch, read_voltages[r]);
            const double lrs = read_current_at(cyc.return_branch, read_voltages[r]);
            report.i_hrs[r].push_back(hrs);
            report.i_lrs[r].push_back(lrs);
            report.ratio[r].push_back(hrs > 0 ? lrs / hrs
                                              : std::numeric_limits<double>::infinity());
        }
    }
    report.set_cdf = empirical_cdf(report.v_set);
    report.reset_cdf = empirical_cdf(report.v_reset);
    return report;
}

namespace {

void write_series_csv(const std::filesystem::path& path, const char* header,
                      const std::vector<double>& values) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open for writing: " + path.string());
    out << header << '\n';
    char line[64];
    for (std::size_t c = 0; c < values.size(); ++c) {
        std::snprintf(line, sizeof line, "%zu,%.9e\n", c, values[c]);
        out << line;
    }
}

void write_cdf_csv(const std::filesystem::path& path,
                   const std::vector<CdfPoint>& cdf) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open for writing: " + path.string());
    out << "value,probability\n";
    char line[64];
    for (const CdfPoint& p : cdf) {
        std::snprintf(line, sizeof line, "%.9e,%.9e\n", p.value, p.probability);
        out << line;
    }
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

void write_report(const CharacterizationReport& report,
                  const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    write_series_csv(out_dir / "set_voltages.csv", "cycle,v_set", report.v_set);
    write_series_csv(out_dir / "reset_voltages.csv", "cycle,v_reset", report.v_reset);
    write_cdf_csv(out_dir / "set_cdf.csv", report.set_cdf);
    write_cdf_csv(out_dir / "reset_cdf.csv", report.reset_cdf);

    for (std::size_t r = 0; r < report.read_voltages.size(); ++r) {
        char name[64];
        std::snprintf(name, sizeof name, "read_%gV.csv", report.read_voltages[r]);
        std::ofstream out(out_dir / name);
        out << "cycle,i_hrs,i_lrs,ratio\n";
        char line[128];
        for (std::size_t c = 0; c < report.i_hrs[r].size(); ++c) {
            std::snprintf(line, sizeof line, "%zu,%.9e,%.9e,%.9e\n", c,
                          report.i_hrs[r][c], report.i_lrs[r][c], report.ratio[r][c]);
            out << line;
        }
    }

    nlohmann::ordered_json j;
    j["cycles"] = report.v_set.size();
    j["dropped_cycles"] = report.dropped_cycles;
    j["median_v_set"] = median(report.v_set);
    j["median_v_reset"] = median(report.v_reset);
    j["read_voltages"] = report.read_voltages;
    std::ofstream out(out_dir / "summary.json");
    out << j.dump(2) << '\n';
}

}  // namespace mcs
