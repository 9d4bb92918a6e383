#pragma once

// Structured-text documents for measures, BV functions and n-d fields, plus
// the flat key-value / CSV report writers. Decimal fields are printed with
// max_digits10 so a save/load round trip reproduces values bit-exactly.
// The schemas are described in docs/formats.md.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "relaxkit/bv1d.hpp"
#include "relaxkit/measure1d.hpp"

namespace relaxkit {

namespace detail {

inline std::string fmt(double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

inline void write_vec(std::ostream& os, const Vec& v) {
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << fmt(v[i]);
}

inline Vec read_vec(std::istringstream& ls, int dim, const char* what) {
    Vec v(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i)
        if (!(ls >> v[static_cast<std::size_t>(i)])) throw document_error(std::string("truncated vector in ") + what);
    return v;
}

}  // namespace detail

inline std::string serialize(const Measure1D& m) {
    std::ostringstream os;
    os << "# relaxkit measure\n";
    os << "dim " << m.dim << "\n";
    os << "interval " << detail::fmt(m.interval.lo) << " " << detail::fmt(m.interval.hi) << "\n";
    os << "[ac]\n";
    os << "cells " << m.ac.cells() << "\n";
    for (int c = 0; c < m.ac.cells(); ++c) {
        detail::write_vec(os, m.ac.cell_value(c));
        os << "\n";
    }
    os << "[atoms]\n";
    for (const auto& a : m.atoms) {
        os << detail::fmt(a.x) << " ";
        detail::write_vec(os, a.weight);
        os << "\n";
    }
    os << "[singular]\n";
    for (const auto& s : m.singular) {
        os << detail::fmt(s.x) << " " << detail::fmt(s.mass) << " ";
        detail::write_vec(os, s.dir);
        os << "\n";
    }
    return os.str();
}

inline Measure1D parse_measure(const std::string& text) {
    Measure1D m;
    std::istringstream in(text);
    std::string line, section;
    int cells = 0;
    std::vector<double> acdata;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (line[0] == '[') {
            section = line;
            continue;
        }
        std::istringstream ls(line);
        if (section.empty()) {
            std::string key;
            ls >> key;
            if (key == "dim") ls >> m.dim;
            else if (key == "interval") ls >> m.interval.lo >> m.interval.hi;
            else throw document_error("unknown measure header field: " + key);
        } else if (section == "[ac]") {
            if (line.rfind("cells", 0) == 0) {
                std::string key;
                ls >> key >> cells;
            } else {
                double v;
                while (ls >> v) acdata.push_back(v);
            }
        } else if (section == "[atoms]") {
            Atom a;
            ls >> a.x;
            a.weight = detail::read_vec(ls, m.dim, "[atoms]");
            m.atoms.push_back(a);
        } else if (section == "[singular]") {
            SingularNode s;
            ls >> s.x >> s.mass;
            s.dir = detail::read_vec(ls, m.dim, "[singular]");
            m.singular.push_back(s);
        } else {
            throw document_error("unknown section in measure document: " + section);
        }
    }
    if (static_cast<int>(acdata.size()) != cells * m.dim) throw document_error("[ac] cell count does not match data");
    m.ac.lo = m.interval.lo;
    m.ac.hi = m.interval.hi;
    m.ac.dim = m.dim;
    m.ac.data = std::move(acdata);
    if (m.ac.cells() == 0) m.ac = GridFn::zero(m.interval.lo, m.interval.hi, 1, m.dim);
    m.validate();
    return m;
}

inline std::string serialize(const BV1D& u) {
    std::ostringstream os;
    os << "# relaxkit bv\n";
    os << "dim " << u.dim << "\n";
    os << "interval " << detail::fmt(u.interval.lo) << " " << detail::fmt(u.interval.hi) << "\n";
    os << "[anchor]\n";
    detail::write_vec(os, u.anchor);
    os << "\n";
    os << "[slope]\n";
    os << "cells " << u.slope.cells() << "\n";
    for (int c = 0; c < u.slope.cells(); ++c) {
        detail::write_vec(os, u.slope.cell_value(c));
        os << "\n";
    }
    os << "[jumps]\n";
    for (const auto& j : u.jumps) {
        os << detail::fmt(j.x) << " ";
        detail::write_vec(os, j.left);
        os << " ";
        detail::write_vec(os, j.right);
        os << "\n";
    }
    os << "[cantor]\n";
    for (const auto& s : u.cantor) {
        os << detail::fmt(s.x) << " " << detail::fmt(s.mass) << " ";
        detail::write_vec(os, s.dir);
        os << "\n";
    }
    return os.str();
}

inline BV1D parse_bv(const std::string& text) {
    BV1D u;
    std::istringstream in(text);
    std::string line, section;
    int cells = 0;
    std::vector<double> slopedata;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (line[0] == '[') {
            section = line;
            continue;
        }
        std::istringstream ls(line);
        if (section.empty()) {
            std::string key;
            ls >> key;
            if (key == "dim") ls >> u.dim;
            else if (key == "interval") ls >> u.interval.lo >> u.interval.hi;
            else throw document_error("unknown bv header field: " + key);
        } else if (section == "[anchor]") {
            u.anchor = detail::read_vec(ls, u.dim, "[anchor]");
        } else if (section == "[slope]") {
            if (line.rfind("cells", 0) == 0) {
                std::string key;
                ls >> key >> cells;
            } else {
                double v;
                while (ls >> v) slopedata.push_back(v);
            }
        } else if (section == "[jumps]") {
            Jump j;
            ls >> j.x;
            j.left = detail::read_vec(ls, u.dim, "[jumps]");
            j.right = detail::read_vec(ls, u.dim, "[jumps]");
            u.jumps.push_back(j);
        } else if (section == "[cantor]") {
            SingularNode s;
            ls >> s.x >> s.mass;
            s.dir = detail::read_vec(ls, u.dim, "[cantor]");
            u.cantor.push_back(s);
        } else {
            throw document_error("unknown section in bv document: " + section);
        }
    }
    if (static_cast<int>(slopedata.size()) != cells * u.dim) throw document_error("[slope] cell count does not match data");
    u.slope.lo = u.interval.lo;
    u.slope.hi = u.interval.hi;
    u.slope.dim = u.dim;
    u.slope.data = std::move(slopedata);
    if (u.slope.cells() == 0) u.slope = GridFn::zero(u.interval.lo, u.interval.hi, 1, u.dim);
    if (u.anchor.empty()) u.anchor = zeros(u.dim);
    u.validate();
    return u;
}

// Atomic write: the full content goes to a sibling temp file first.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw document_error("cannot write " + tmp.string());
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw document_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Flat key-value report, keys in insertion order.
struct KvWriter {
    std::vector<std::pair<std::string, std::string>> rows;

    void add(const std::string& key, double v) { rows.emplace_back(key, detail::fmt(v)); }
    void add(const std::string& key, const std::string& v) { rows.emplace_back(key, v); }

    std::string str() const {
        std::ostringstream os;
        for (const auto& [k, v] : rows) os << k << " = " << v << "\n";
        return os.str();
    }
};

struct CsvWriter {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(const std::vector<double>& vals) {
        std::vector<std::string> r;
        r.reserve(vals.size());
        for (double v : vals) r.push_back(detail::fmt(v));
        rows.push_back(std::move(r));
    }

    std::string str() const {
        std::ostringstream os;
        for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
        os << "\n";
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
            os << "\n";
        }
        return os.str();
    }
};

}  // namespace relaxkit
