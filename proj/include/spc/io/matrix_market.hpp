#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "spc/core/errors.hpp"
#include "spc/core/sparse_matrix.hpp"

namespace spc {

// Coordinate format only; "real", "integer" and "pattern" fields with
// "general" or "symmetric" layout. Indices are 1-based on disk.
inline SparseMatrix read_matrix_market(std::istream& in) {
    std::string line;
    long lineno = 0;
    auto lower = [](std::string s) {
        std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
        return s;
    };
    if (!std::getline(in, line)) throw ParseError("empty input", 1);
    ++lineno;
    std::istringstream hs(line);
    std::string banner, object, format, field, symmetry;
    hs >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket") throw ParseError("missing %%MatrixMarket banner", lineno);
    object = lower(object);
    format = lower(format);
    field = lower(field);
    symmetry = lower(symmetry);
    if (object != "matrix" || format != "coordinate")
        throw ParseError("only 'matrix coordinate' is supported", lineno);
    if (field != "real" && field != "integer" && field != "pattern")
        throw ParseError("unsupported field '" + field + "'", lineno);
    if (symmetry != "general" && symmetry != "symmetric")
        throw ParseError("unsupported symmetry '" + symmetry + "'", lineno);

    long long nr = -1, nc = -1, nz = -1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '%') continue;
        std::istringstream ss(line);
        if (!(ss >> nr >> nc >> nz) || nr < 0 || nc < 0 || nz < 0) throw ParseError("malformed size line", lineno);
        break;
    }
    if (nz < 0) throw ParseError("missing size line", lineno);

    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(symmetry == "symmetric" ? 2 * nz : nz));
    long long seen = 0;
    while (seen < nz && std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '%') continue;
        std::istringstream ss(line);
        long long i, j;
        double v = 1.0;
        if (!(ss >> i >> j)) throw ParseError("malformed entry", lineno);
        if (field != "pattern" && !(ss >> v)) throw ParseError("missing value", lineno);
        if (i < 1 || i > nr || j < 1 || j > nc)
            throw ParseError("index (" + std::to_string(i) + "," + std::to_string(j) + ") out of range", lineno);
        t.push_back({Index(i - 1), Index(j - 1), v});
        if (symmetry == "symmetric" && i != j) t.push_back({Index(j - 1), Index(i - 1), v});
        ++seen;
    }
    if (seen < nz) throw ParseError("expected " + std::to_string(nz) + " entries, found " + std::to_string(seen), lineno);
    try {
        return SparseMatrix(Index(nr), Index(nc), std::move(t));
    } catch (const ContractViolation& e) {
        throw ParseError(e.what(), lineno);
    }
}

inline SparseMatrix read_matrix_market(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open " + path, 0);
    return read_matrix_market(f);
}

inline void write_matrix_market(std::ostream& out, const SparseMatrix& m) {
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << m.rows() << ' ' << m.cols() << ' ' << m.nnz() << '\n';
    char buf[64];
    for (const auto& t : m.triplets()) {
        std::snprintf(buf, sizeof buf, "%.17g", t.value);
        out << (t.row + 1) << ' ' << (t.col + 1) << ' ' << buf << '\n';
    }
}

inline void write_matrix_market(const std::string& path, const SparseMatrix& m) {
    std::ofstream f(path);
    if (!f) throw ContractViolation("cannot write " + path);
    write_matrix_market(f, m);
}

}  // namespace spc
