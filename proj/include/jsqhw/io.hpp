#pragma once

// File output: CSV tables and JSON documents with deterministic number
// formatting (shortest round-trip via std::to_chars), so re-running with the
// same seed reproduces every artifact byte for byte.  Each output directory
// receives exactly one manifest.json recording the effective configuration,
// the master seed, the tool version and the wall-clock duration.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "jsqhw/errors.hpp"
#include "jsqhw/regeneration.hpp"
#include "jsqhw/stats.hpp"
#include "jsqhw/version.hpp"

namespace jsqhw::io {

using json = nlohmann::json;

// Shortest decimal string that round-trips to the same double.
inline std::string fmt(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary); // binary: '\n' endings everywhere
    if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
    return os;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    auto os = open_out(path);
    os << text;
}

inline void write_json(const std::filesystem::path& path, const json& doc) {
    auto os = open_out(path);
    os << doc.dump(2) << '\n';
}

// --- concrete artifact writers ----------------------------------------------

// Trajectory table: t,q1,q2,l.
inline void write_trajectory_csv(const std::filesystem::path& path,
                                 const std::vector<DiffusionState>& states) {
    auto os = open_out(path);
    os << "t,q1,q2,l\n";
    for (const auto& s : states)
        os << fmt(s.t) << ',' << fmt(s.q1) << ',' << fmt(s.q2) << ',' << fmt(s.l) << '\n';
}

// Cycle table: cycle_index,xi,truncated,<one column per functional>.
inline void write_cycles_csv(const std::filesystem::path& path, const CycleSet& set) {
    auto os = open_out(path);
    os << "cycle_index,xi,truncated";
    for (const auto& n : set.names) os << ',' << n;
    os << '\n';
    for (std::size_t k = 0; k < set.cycles.size(); ++k) {
        const auto& c = set.cycles[k];
        os << k << ',' << fmt(c.xi) << ',' << (c.truncated ? 1 : 0);
        for (const auto& n : set.names) os << ',' << fmt(c.integrals.at(n));
        os << '\n';
    }
}

// Estimates document: functional name -> {value, std_error, n_cycles}.
inline json estimates_json(const CycleSet& set, const std::vector<std::string>& names) {
    json doc = json::object();
    for (const auto& n : names) {
        const auto e = estimate_stationary(set, n);
        doc[n] = {{"value", e.value}, {"std_error", e.std_error}, {"n_cycles", e.n_cycles}};
    }
    return doc;
}

// Histogram table: coordinate,bin_left,bin_right,mass.
inline void write_histogram_csv(const std::filesystem::path& path, const std::string& coordinate,
                                const Histogram& h) {
    auto os = open_out(path);
    os << "coordinate,bin_left,bin_right,mass\n";
    for (std::size_t b = 0; b < h.masses.size(); ++b)
        os << coordinate << ',' << fmt(h.edges[b]) << ',' << fmt(h.edges[b + 1]) << ','
           << fmt(h.masses[b]) << '\n';
}

// Tail-curve table: level,raw,corrected,std_error.
inline void write_tail_csv(const std::filesystem::path& path, const TailCurve& tc) {
    auto os = open_out(path);
    os << "level,raw,corrected,std_error\n";
    for (std::size_t i = 0; i < tc.levels.size(); ++i)
        os << fmt(tc.levels[i]) << ',' << fmt(tc.raw[i]) << ',' << fmt(tc.corrected[i]) << ','
           << fmt(tc.std_error[i]) << '\n';
}

// --- run manifest -------------------------------------------------------------

// Reproducibility record for one output directory: what ran, with which
// effective parameters and seed, and how long it took.
struct RunManifest {
    std::string subcommand;
    json config;             // effective configuration after flag/config merge
    std::uint64_t seed = 0;  // master seed
    double duration_seconds = 0.0;
    json module_params;      // per-module parameter dump
};

inline void write_manifest(const std::filesystem::path& dir, const RunManifest& m) {
    json doc = {
        {"tool", {{"name", "jsqhw"}, {"version", jsqhw::version_string}}},
        {"subcommand", m.subcommand},
        {"seed", m.seed},
        {"config", m.config},
        {"modules", m.module_params},
        {"duration_seconds", m.duration_seconds},
    };
    write_json(dir / "manifest.json", doc);
}

} // namespace jsqhw::io
