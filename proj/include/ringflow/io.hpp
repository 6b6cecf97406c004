#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "ringflow/analysis.hpp"
#include "ringflow/error.hpp"
#include "ringflow/oracle.hpp"
#include "ringflow/solver.hpp"

namespace ringflow::io {

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    if (s == "nan") return std::nan("");
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw InvalidInput("not a number: '" + std::string(s) + "'");
    }
    return v;
}

/// Header plus rows of numbers; the in-memory form of every CSV we emit.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

inline void write_table(std::ostream& os, const Table& table) {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        os << (c ? "," : "") << table.header[c];
    }
    os << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << format_double(row[c]);
        os << '\n';
    }
}

inline Table read_table(std::istream& is) {
    Table t;
    std::string line;
    if (!std::getline(is, line)) throw InvalidInput("empty CSV");
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::size_t start = 0;
        while (true) {
            const auto comma = s.find(',', start);
            out.push_back(s.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        return out;
    };
    t.header = split(line);
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != t.header.size()) {
            throw InvalidInput("CSV line " + std::to_string(lineno) + " has " +
                               std::to_string(cells.size()) + " fields, expected " +
                               std::to_string(t.header.size()));
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(parse_double(c));
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline Table snapshot_table(double t, const DensityProfile& profile, const VelocityField& v) {
    Table out{{"t", "x", "rho", "v"}, {}};
    out.rows.reserve(profile.n_cells());
    for (std::size_t i = 0; i < profile.n_cells(); ++i) {
        out.rows.push_back({t, profile.node(i), profile[i], v[i]});
    }
    return out;
}

inline Table series_table(const std::vector<SeriesRecord>& series) {
    Table out{{"t", "mass", "min", "max", "l2", "log_l2", "V"}, {}};
    out.rows.reserve(series.size());
    for (const auto& r : series) {
        // log(0) is -inf, written as such.
        out.rows.push_back({r.t, r.mass, r.min, r.max, r.l2, std::log(r.l2), r.V});
    }
    return out;
}

inline Table diagram_table(const FundamentalDiagram& fd) {
    Table out{{"rho", "q_nudge", "q_base", "v_nudge"}, {}};
    for (const auto& r : fd.rows) out.rows.push_back({r.rho, r.q_nudge, r.q_base, r.v_nudge});
    return out;
}

inline Table wave_table(const WaveComparison& cmp) {
    Table out{{"t", "l2_error", "sup_error", "l2_deviation_from_rho_star"}, {}};
    for (const auto& r : cmp.rows) out.rows.push_back({r.t, r.l2_error, r.sup_error, r.l2_deviation});
    return out;
}

inline void save(const std::string& path, const Table& table) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    write_table(os, table);
    if (!os) throw std::runtime_error("write failed for " + path);
}

inline Table load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InvalidInput("cannot open " + path);
    return read_table(is);
}

/// Column lookup by header name.
inline std::size_t column(const Table& t, std::string_view name) {
    for (std::size_t c = 0; c < t.header.size(); ++c) {
        if (t.header[c] == name) return c;
    }
    throw InvalidInput("CSV has no column '" + std::string(name) + "'");
}

}  // namespace ringflow::io
