#pragma once

// CSV emission for run artifacts.  All numbers are serialized with
// std::to_chars (shortest round-trip decimal): full precision, no locale,
// byte-stable across runs, so output files can be compared with cmp.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "mfc/control.hpp"
#include "mfc/time_grid.hpp"

namespace mfc {

/** Shortest decimal string that parses back to exactly this double. */
inline std::string format_double(double x) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    if (res.ec != std::errc())
        throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, res.ptr);
}

inline std::string format_int(std::int64_t x) {
    char buf[24];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

namespace detail {

inline std::ofstream open_for_write(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

} // namespace detail

/** Loss-curve table: columns t,value,stderr (one row per grid point). */
inline void write_curve_csv(const std::string& path, const TimeGrid& grid,
                            const std::vector<double>& values,
                            const std::vector<double>& stderrs) {
    if (values.size() != grid.size())
        throw std::invalid_argument("write_curve_csv: values must cover the grid");
    auto out = detail::open_for_write(path);
    out << "t,value,stderr\n";
    for (std::size_t k = 0; k < values.size(); ++k) {
        double se = k < stderrs.size() ? stderrs[k] : 0.0;
        out << format_double(grid.t(k)) << ',' << format_double(values[k]) << ','
            << format_double(se) << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

/** Scaling table: columns N,S_lower,S_mid,S_upper,stderr,reference. */
inline void write_scaling_csv(const std::string& path, const ScalingTable& table) {
    auto out = detail::open_for_write(path);
    out << "N,S_lower,S_mid,S_upper,stderr,reference\n";
    for (const auto& r : table.rows) {
        out << format_int(r.n_particles) << ',' << format_double(r.s_lower) << ','
            << format_double(r.s_mid) << ',' << format_double(r.s_upper) << ','
            << format_double(r.stderr_mid) << ',' << format_double(r.reference) << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

/** Companion plot data for the scaling figure: both reference lines. */
inline void write_scaling_reference_csv(const std::string& path, const ScalingTable& table) {
    auto out = detail::open_for_write(path);
    out << "N,reference,reference_upper\n";
    for (const auto& r : table.rows) {
        out << format_int(r.n_particles) << ',' << format_double(r.reference) << ','
            << format_double(r.reference_upper) << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

/** Per-replication summary: survive-forever sandwich and horizon state. */
inline void write_replications_csv(const std::string& path, const RunResult& run) {
    auto out = detail::open_for_write(path);
    out << "rep,alive_at_horizon,flagged,S_lower,S_mid,S_upper\n";
    for (std::size_t r = 0; r < run.reps.size(); ++r) {
        const auto& s = run.reps[r];
        out << format_int(static_cast<std::int64_t>(r)) << ','
            << format_int(s.alive_at_horizon) << ',' << format_int(s.flagged_count) << ','
            << format_double(s.effective.lower) << ',' << format_double(s.effective.midpoint)
            << ',' << format_double(s.effective.upper) << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

/** Two-column name,value table (analytics constants and the like). */
inline void write_constants_csv(const std::string& path,
                                const std::vector<std::pair<std::string, double>>& rows) {
    auto out = detail::open_for_write(path);
    out << "name,value\n";
    for (const auto& [name, value] : rows)
        out << name << ',' << format_double(value) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

} // namespace mfc
