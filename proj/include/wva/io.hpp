#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wva/errors.hpp"
#include "wva/reconstruction.hpp"

namespace wva {

/// Shortest exact decimal representation (17 significant digits round-trip).
inline std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

inline double parse_double(const std::string& s, const char* what) {
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(std::string("CSV: cannot parse number for ") + what + ": '" + s + "'");
    }
}

}  // namespace detail

inline std::string to_csv(const SignalSet& set) {
    set.validate();
    std::ostringstream out;
    out << "k,value,sigma,kind,quadrature,shots\n";
    const char* kind = (set.kind == SignalKind::cos) ? "cos" : "sin";
    const char* quad = (set.quadrature == Quadrature::z) ? "z" : "p";
    for (size_t i = 0; i < set.ks.size(); ++i) {
        out << format_double(set.ks[i]) << ',' << format_double(set.values[i]) << ','
            << format_double(set.sigmas[i]) << ',' << kind << ',' << quad << ',' << set.shots
            << '\n';
    }
    return out.str();
}

inline SignalSet signal_set_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("SignalSet CSV: empty input");
    if (detail::split_csv_line(line) !=
        std::vector<std::string>{"k", "value", "sigma", "kind", "quadrature", "shots"}) {
        throw ConfigError("SignalSet CSV: unexpected header: " + line);
    }
    SignalSet set;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != 6) throw ConfigError("SignalSet CSV: expected 6 fields: " + line);
        set.ks.push_back(detail::parse_double(f[0], "k"));
        set.values.push_back(detail::parse_double(f[1], "value"));
        set.sigmas.push_back(detail::parse_double(f[2], "sigma"));
        SignalKind kind;
        if (f[3] == "cos") kind = SignalKind::cos;
        else if (f[3] == "sin") kind = SignalKind::sin;
        else throw ConfigError("SignalSet CSV: unknown kind '" + f[3] + "'");
        Quadrature quad;
        if (f[4] == "z") quad = Quadrature::z;
        else if (f[4] == "p") quad = Quadrature::p;
        else throw ConfigError("SignalSet CSV: unknown quadrature '" + f[4] + "'");
        const long shots = std::stol(f[5]);
        if (first) {
            set.kind = kind;
            set.quadrature = quad;
            set.shots = shots;
            first = false;
        } else if (kind != set.kind || quad != set.quadrature || shots != set.shots) {
            throw ConfigError("SignalSet CSV: inconsistent kind/quadrature/shots across rows");
        }
    }
    set.validate();
    return set;
}

/// z,probability rows on the reconstruction grid.
inline std::string to_csv(const ReconstructionResult& result, const Grid& grid) {
    if (result.probabilities.size() != grid.points.size()) {
        throw ContractViolation("ReconstructionResult CSV: grid size mismatch");
    }
    std::ostringstream out;
    out << "z,probability\n";
    for (size_t i = 0; i < grid.points.size(); ++i) {
        out << format_double(grid.points[i]) << ',' << format_double(result.probabilities[i])
            << '\n';
    }
    return out.str();
}

struct ReconstructionTable {
    std::vector<double> z;
    std::vector<double> probability;
};

inline ReconstructionTable reconstruction_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("Reconstruction CSV: empty input");
    if (detail::split_csv_line(line) != std::vector<std::string>{"z", "probability"}) {
        throw ConfigError("Reconstruction CSV: unexpected header: " + line);
    }
    ReconstructionTable t;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != 2) throw ConfigError("Reconstruction CSV: expected 2 fields: " + line);
        t.z.push_back(detail::parse_double(f[0], "z"));
        t.probability.push_back(detail::parse_double(f[1], "probability"));
    }
    return t;
}

/// Metadata sidecar accompanying the z,probability CSV.
inline nlohmann::json reconstruction_sidecar(const ReconstructionResult& result) {
    nlohmann::json j;
    j["objective"] = result.objective;
    j["iterations"] = result.iterations;
    j["kinetic_bound_active"] = result.kinetic_bound_active;
    j["kinetic_bound"] = result.kinetic_bound;
    j["converged"] = result.converged;
    j["p2_source"] = result.p2_source;
    return j;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    out << content;
    if (!out) throw ConfigError("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace wva
