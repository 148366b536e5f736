// io.hpp: CSV / JSON / dense-matrix output with a parameter echo in every header

#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "blochrabi/errors.hpp"
#include "blochrabi/model.hpp"

namespace blochrabi::io {

using HeaderEntries = std::vector<std::pair<std::string, std::string>>;

/// 17 significant digits in scientific notation; round-trips every double.
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.16e", x);
    return buf;
}

inline HeaderEntries param_echo(const ModelParams& p) {
    const DerivedQuantities d = derive(p);
    return {{"delta", format_double(p.delta)},
            {"tau_a", format_double(p.tau_a)},
            {"tau_b", format_double(p.tau_b)},
            {"c0", format_double(p.c0)},
            {"force", format_double(p.force)},
            {"coupling_V", format_double(d.coupling)},
            {"delta_x", format_double(d.delta_x)},
            {"bloch_period", format_double(d.bloch_period)}};
}

struct Table {
    HeaderEntries header;             // echoed as "# key = value"
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> trailer; // extra comment lines after the data
};

inline void write_csv(std::ostream& os, const Table& t) {
    for (const auto& [k, v] : t.header) os << "# " << k << " = " << v << '\n';
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << '\n';
    for (const auto& row : t.rows) {
        if (row.size() != t.columns.size()) throw ParameterError("write_csv: row width does not match columns");
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
        os << '\n';
    }
    for (const auto& line : t.trailer) os << "# " << line << '\n';
}

/// Header entries become "parameters", each column an array under its name.
inline nlohmann::ordered_json to_json(const Table& t) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto& [k, v] : t.header) {
        try {
            std::size_t used = 0;
            const double x = std::stod(v, &used);
            if (used == v.size()) {
                params[k] = x;
                continue;
            }
        } catch (const std::exception&) {
        }
        params[k] = v;
    }
    j["parameters"] = params;
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
        std::vector<double> col;
        col.reserve(t.rows.size());
        for (const auto& row : t.rows) col.push_back(row.at(c));
        j[t.columns[c]] = col;
    }
    if (!t.trailer.empty()) j["notes"] = t.trailer;
    return j;
}

inline void write_json(std::ostream& os, const Table& t) { os << to_json(t).dump(2) << '\n'; }

/// Parsed CSV produced by write_csv.
struct CsvData {
    HeaderEntries header;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

inline CsvData read_csv(std::istream& is) {
    CsvData d;
    std::string line;
    bool have_columns = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find(" = ");
            if (!have_columns && eq != std::string::npos) d.header.emplace_back(line.substr(2, eq - 2), line.substr(eq + 3));
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        if (!have_columns) {
            while (std::getline(ss, cell, ',')) d.columns.push_back(cell);
            have_columns = true;
            continue;
        }
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        d.rows.push_back(std::move(row));
    }
    return d;
}

/// Dense row-major text format: "# dense <rows> <cols>" then one row per line.
inline void write_dense_matrix(std::ostream& os, const Eigen::MatrixXd& m, const HeaderEntries& header = {}) {
    for (const auto& [k, v] : header) os << "# " << k << " = " << v << '\n';
    os << "# dense " << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) os << (c ? " " : "") << format_double(m(r, c));
        os << '\n';
    }
}

inline Eigen::MatrixXd read_dense_matrix(std::istream& is) {
    std::string line;
    Eigen::Index rows = -1, cols = -1;
    while (std::getline(is, line)) {
        if (line.rfind("# dense ", 0) == 0) {
            std::istringstream ss(line.substr(8));
            ss >> rows >> cols;
            break;
        }
    }
    if (rows < 0 || cols < 0) throw ParameterError("read_dense_matrix: missing '# dense' header");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            if (!(is >> m(r, c))) throw ParameterError("read_dense_matrix: truncated data");
        }
    }
    return m;
}

} // namespace blochrabi::io
