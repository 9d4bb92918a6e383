#pragma once

// Scenario-driven runner: loads integrand presets and (u, v) documents, runs
// the requested tasks (evaluate, cell, g_table, recover, probe,
// concentration) and writes the reports. All outputs are deterministic for a
// fixed scenario file and written atomically per task.

#include <future>
#include <mutex>
#include <set>

#include "relaxkit/document.hpp"
#include "relaxkit/sequences.hpp"

namespace relaxkit {

struct Scenario {
    std::string name = "scenario";
    std::string dimension = "1d";  // "1d" | "2d"
    std::string f1_name, f2_name, W_name;
    std::string u_doc, v_doc;
    std::vector<std::string> tasks;
    std::uint64_t seed = 0;
    int cell_mesh = 256;
    Vec cell_aplus = {1.0}, cell_aminus = {1.0}, cell_b = {1.0};
    std::vector<double> g_table_a, g_table_b;
    std::vector<double> probe_eps;
    double probe_tol = 0.05;
    double battery_tol = 0.1;
    int target_dim = 1;    // m
    int measure_dim = 1;   // d
    std::filesystem::path base_dir;
};

inline Scenario parse_scenario(const std::filesystem::path& path) {
    Scenario s;
    s.base_dir = path.parent_path();
    std::istringstream in(read_file(path));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        auto read_list = [&](std::vector<double>& out) {
            double v;
            while (ls >> v) out.push_back(v);
        };
        if (key == "name") ls >> s.name;
        else if (key == "dimension") ls >> s.dimension;
        else if (key == "f1") ls >> s.f1_name;
        else if (key == "f2") ls >> s.f2_name;
        else if (key == "W") ls >> s.W_name;
        else if (key == "u_doc") ls >> s.u_doc;
        else if (key == "v_doc") ls >> s.v_doc;
        else if (key == "tasks") {
            std::string t;
            while (ls >> t) s.tasks.push_back(t);
        } else if (key == "seed") ls >> s.seed;
        else if (key == "cell_mesh") ls >> s.cell_mesh;
        else if (key == "cell_aplus") { s.cell_aplus.clear(); read_list(s.cell_aplus); }
        else if (key == "cell_aminus") { s.cell_aminus.clear(); read_list(s.cell_aminus); }
        else if (key == "cell_b") { s.cell_b.clear(); read_list(s.cell_b); }
        else if (key == "g_table_a") read_list(s.g_table_a);
        else if (key == "g_table_b") read_list(s.g_table_b);
        else if (key == "probe_eps") read_list(s.probe_eps);
        else if (key == "probe_tol") ls >> s.probe_tol;
        else if (key == "battery_tol") ls >> s.battery_tol;
        else if (key == "target_dim") ls >> s.target_dim;
        else if (key == "measure_dim") ls >> s.measure_dim;
        else throw document_error("unknown scenario field: " + key);
    }
    return s;
}

inline MeshField parse_field(const std::string& text);
inline NdMeasure parse_ndmeasure(const std::string& text);

struct ValidationReport {
    bool ok = true;
    std::vector<std::string> messages;

    void fail(const std::string& m) {
        ok = false;
        messages.push_back(m);
    }
    void note(const std::string& m) { messages.push_back(m); }
};

inline ValidationReport validate_scenario(const Scenario& s) {
    ValidationReport rep;
    static const std::set<std::string> known_tasks = {"evaluate", "cell", "g_table", "recover", "probe", "concentration"};
    if (s.tasks.empty()) rep.fail("field 'tasks': task list is empty");
    for (const auto& t : s.tasks)
        if (!known_tasks.count(t)) rep.fail("field 'tasks': unknown task '" + t + "'");
    if (s.dimension != "1d" && s.dimension != "2d") rep.fail("field 'dimension': expected 1d or 2d");

    struct Item {
        const char* field;
        const std::string* name;
        Role role;
        int dim;
    };
    std::vector<Item> items = {{"f1", &s.f1_name, Role::f1, s.target_dim},
                               {"f2", &s.f2_name, Role::f2, s.measure_dim},
                               {"W", &s.W_name, Role::W, s.target_dim * (s.dimension == "2d" ? 2 : 1)}};
    for (const auto& it : items) {
        if (it.name->empty()) {
            rep.fail(std::string("field '") + it.field + "': missing preset name");
            continue;
        }
        FunctionModel m;
        try {
            m = preset(*it.name, it.dim);
        } catch (const std::exception&) {
            rep.fail(std::string("field '") + it.field + "': unknown preset '" + *it.name + "'");
            continue;
        }
        auto g = check_growth(m, it.role, 129);
        if (!g.pass)
            for (const auto& v : g.violations) rep.fail(std::string("field '") + it.field + "' (" + *it.name + "): " + v);
        else
            rep.note(std::string(it.field) + " '" + *it.name + "' satisfies its growth hypothesis");
    }

    bool needs_docs = false;
    for (const auto& t : s.tasks)
        if (t == "evaluate" || t == "recover" || t == "probe" || t == "concentration") needs_docs = true;
    if (needs_docs && (s.u_doc.empty() || s.v_doc.empty()))
        rep.fail("fields 'u_doc'/'v_doc': required by the evaluate/recover/probe/concentration tasks");

    auto check_doc = [&](const char* field, const std::string& rel) {
        if (rel.empty()) return;  // optional for g_table/cell-only scenarios
        auto p = s.base_dir / rel;
        if (!std::filesystem::exists(p)) {
            rep.fail(std::string("field '") + field + "': missing file " + p.string());
            return;
        }
        try {
            bool is_u = field == std::string("u_doc");
            if (s.dimension == "1d") {
                if (is_u) (void)parse_bv(read_file(p));
                else (void)parse_measure(read_file(p));
            } else {
                if (is_u) (void)parse_field(read_file(p));
                else (void)parse_ndmeasure(read_file(p));
            }
        } catch (const std::exception& e) {
            rep.fail(std::string("field '") + field + "': " + e.what());
        }
    };
    check_doc("u_doc", s.u_doc);
    check_doc("v_doc", s.v_doc);
    return rep;
}

// --- n-d documents -----------------------------------------------------

inline std::string serialize(const MeshField& f) {
    std::ostringstream os;
    os << "# relaxkit field\n";
    os << "n " << f.n << "\nm " << f.m << "\n";
    os << "nodes";
    for (int a = 0; a < f.n; ++a) os << " " << f.nodes[static_cast<std::size_t>(a)];
    os << "\nbox";
    for (int a = 0; a < f.n; ++a) os << " " << detail::fmt(f.lo[static_cast<std::size_t>(a)]);
    for (int a = 0; a < f.n; ++a) os << " " << detail::fmt(f.hi[static_cast<std::size_t>(a)]);
    os << "\n[values]\n";
    for (int i = 0; i < f.node_count(); ++i) {
        for (int k = 0; k < f.m; ++k) os << (k ? " " : "") << detail::fmt(f.data[static_cast<std::size_t>(i * f.m + k)]);
        os << "\n";
    }
    return os.str();
}

inline MeshField parse_field(const std::string& text) {
    MeshField f;
    std::istringstream in(text);
    std::string line, section;
    std::vector<double> vals;
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
            if (key == "n") ls >> f.n;
            else if (key == "m") ls >> f.m;
            else if (key == "nodes")
                for (int a = 0; a < f.n; ++a) ls >> f.nodes[static_cast<std::size_t>(a)];
            else if (key == "box") {
                for (int a = 0; a < f.n; ++a) ls >> f.lo[static_cast<std::size_t>(a)];
                for (int a = 0; a < f.n; ++a) ls >> f.hi[static_cast<std::size_t>(a)];
            } else
                throw document_error("unknown field header: " + key);
        } else if (section == "[values]") {
            double v;
            while (ls >> v) vals.push_back(v);
        } else {
            throw document_error("unknown section in field document: " + section);
        }
    }
    if (static_cast<int>(vals.size()) != f.node_count() * f.m) throw document_error("[values] does not match nodes*m");
    f.data = std::move(vals);
    return f;
}

inline std::string serialize(const NdMeasure& v) {
    std::ostringstream os;
    os << "# relaxkit ndmeasure\n";
    os << "n " << v.n << "\nd " << v.d << "\n";
    os << "cells";
    for (int a = 0; a < v.n; ++a) os << " " << v.cells[static_cast<std::size_t>(a)];
    os << "\nbox";
    for (int a = 0; a < v.n; ++a) os << " " << detail::fmt(v.lo[static_cast<std::size_t>(a)]);
    for (int a = 0; a < v.n; ++a) os << " " << detail::fmt(v.hi[static_cast<std::size_t>(a)]);
    os << "\n[ac]\n";
    for (int c = 0; c < v.cell_count(); ++c) {
        for (int k = 0; k < v.d; ++k) os << (k ? " " : "") << detail::fmt(v.ac[static_cast<std::size_t>(c * v.d + k)]);
        os << "\n";
    }
    os << "[atoms]\n";
    for (const auto& a : v.atoms) {
        for (int i = 0; i < v.n; ++i) os << detail::fmt(a.x[static_cast<std::size_t>(i)]) << " ";
        detail::write_vec(os, a.weight);
        os << "\n";
    }
    os << "[singular]\n";
    for (const auto& sn : v.singular) {
        for (int i = 0; i < v.n; ++i) os << detail::fmt(sn.x[static_cast<std::size_t>(i)]) << " ";
        os << detail::fmt(sn.mass) << " ";
        detail::write_vec(os, sn.dir);
        os << "\n";
    }
    return os.str();
}

inline NdMeasure parse_ndmeasure(const std::string& text) {
    NdMeasure v;
    std::istringstream in(text);
    std::string line, section;
    std::vector<double> ac;
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
            if (key == "n") ls >> v.n;
            else if (key == "d") ls >> v.d;
            else if (key == "cells")
                for (int a = 0; a < v.n; ++a) ls >> v.cells[static_cast<std::size_t>(a)];
            else if (key == "box") {
                for (int a = 0; a < v.n; ++a) ls >> v.lo[static_cast<std::size_t>(a)];
                for (int a = 0; a < v.n; ++a) ls >> v.hi[static_cast<std::size_t>(a)];
            } else
                throw document_error("unknown ndmeasure header: " + key);
        } else if (section == "[ac]") {
            double x;
            while (ls >> x) ac.push_back(x);
        } else if (section == "[atoms]") {
            NdAtom a;
            for (int i = 0; i < v.n; ++i) ls >> a.x[static_cast<std::size_t>(i)];
            a.weight = detail::read_vec(ls, v.d, "[atoms]");
            v.atoms.push_back(a);
        } else if (section == "[singular]") {
            NdSingularNode sn;
            for (int i = 0; i < v.n; ++i) ls >> sn.x[static_cast<std::size_t>(i)];
            ls >> sn.mass;
            sn.dir = detail::read_vec(ls, v.d, "[singular]");
            v.singular.push_back(sn);
        } else {
            throw document_error("unknown section in ndmeasure document: " + section);
        }
    }
    if (static_cast<int>(ac.size()) != v.cell_count() * v.d) throw document_error("[ac] does not match cells*d");
    v.ac = std::move(ac);
    return v;
}

// --- runner -------------------------------------------------------------

struct RunOptions {
    std::filesystem::path out_dir = ".";
    int jobs = 1;
    bool svg = false;
    std::optional<std::uint64_t> seed_override;
};

namespace detail {

inline std::string energy_report_kv(const EnergyReport& rep) {
    KvWriter kv;
    kv.add("total", rep.total);
    kv.add("diffuse_f2_term", rep.diffuse_f2_term);
    kv.add("diffuse_W_term", rep.diffuse_W_term);
    kv.add("boundary_left", rep.boundary_left);
    kv.add("boundary_right", rep.boundary_right);
    kv.add("singular_v_term", rep.singular_v_term);
    kv.add("g_term", rep.g_term);
    kv.add("quadrature_error", rep.quadrature_error);
    kv.add("jump_count", static_cast<double>(rep.jump_terms.size()));
    for (std::size_t i = 0; i < rep.jump_terms.size(); ++i) {
        kv.add("jump_" + std::to_string(i) + "_x", rep.jump_terms[i].first);
        kv.add("jump_" + std::to_string(i) + "_value", rep.jump_terms[i].second);
    }
    return kv.str();
}

inline std::string energy_report_csv(const std::string& name, const EnergyReport& rep) {
    CsvWriter csv;
    csv.header = {"total", "diffuse_f2", "diffuse_W", "jump_sum", "boundary_left", "boundary_right",
                  "singular_v", "g_term", "quadrature_error"};
    double jsum = 0.0;
    for (const auto& [x, v] : rep.jump_terms) jsum += v;
    csv.add_row({rep.total, rep.diffuse_f2_term, rep.diffuse_W_term, jsum, rep.boundary_left, rep.boundary_right,
                 rep.singular_v_term, rep.g_term, rep.quadrature_error});
    (void)name;
    return csv.str();
}

inline std::string probe_csv(const ProbeReport& rep) {
    CsvWriter csv;
    csv.header = {"k", "eps", "delta", "eta", "energy", "relaxed_value", "gap", "support_measure", "mass"};
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        const auto& r = rep.rows[i];
        csv.add_row({static_cast<double>(i), r.param, 0.0, 0.0, r.energy, rep.relaxed_value,
                     r.energy - rep.relaxed_value, r.support, r.mass});
    }
    return csv.str();
}

inline std::string energy_trace_svg(const std::vector<double>& params, const std::vector<double>& energies,
                                    double relaxed) {
    const int w = 640, h = 400, pad = 48;
    double emin = relaxed, emax = relaxed;
    for (double e : energies) {
        emin = std::min(emin, e);
        emax = std::max(emax, e);
    }
    if (emax - emin < 1e-12) emax = emin + 1.0;
    auto X = [&](std::size_t i) {
        return pad + (w - 2.0 * pad) * (params.size() > 1 ? static_cast<double>(i) / (params.size() - 1) : 0.5);
    };
    auto Y = [&](double e) { return h - pad - (h - 2.0 * pad) * (e - emin) / (emax - emin); };
    std::ostringstream os;
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
    os << "<rect width='100%' height='100%' fill='white'/>\n";
    os << "<line x1='" << pad << "' y1='" << h - pad << "' x2='" << w - pad << "' y2='" << h - pad
       << "' stroke='black'/>\n";
    os << "<line x1='" << pad << "' y1='" << pad << "' x2='" << pad << "' y2='" << h - pad << "' stroke='black'/>\n";
    os << "<line x1='" << pad << "' y1='" << Y(relaxed) << "' x2='" << w - pad << "' y2='" << Y(relaxed)
       << "' stroke='gray' stroke-dasharray='6,4'/>\n";
    os << "<polyline fill='none' stroke='steelblue' stroke-width='2' points='";
    for (std::size_t i = 0; i < energies.size(); ++i) os << X(i) << "," << Y(energies[i]) << " ";
    os << "'/>\n";
    os << "<text x='" << pad << "' y='" << pad - 12 << "' font-size='13'>energy trace (dashed: relaxed value)</text>\n";
    os << "</svg>\n";
    return os.str();
}

}  // namespace detail

// Runs the scenario; returns 0 on success, 2 on validation failure, 3 on
// numerical failure (solver disagreement beyond tolerance or invalid probe).
inline int run_scenario(const std::filesystem::path& scenario_path, const RunOptions& opt, std::ostream& log) {
    Scenario s;
    try {
        s = parse_scenario(scenario_path);
    } catch (const std::exception& e) {
        log << "validation failure: " << e.what() << "\n";
        return 2;
    }
    if (opt.seed_override) s.seed = *opt.seed_override;
    auto val = validate_scenario(s);
    for (const auto& m : val.messages) log << (val.ok ? "note: " : "issue: ") << m << "\n";
    if (!val.ok) return 2;

    std::filesystem::create_directories(opt.out_dir);
    auto out = [&](const std::string& suffix) { return opt.out_dir / (s.name + suffix); };

    const bool is1d = s.dimension == "1d";
    FunctionModel f1 = preset(s.f1_name, s.target_dim);
    FunctionModel f2 = preset(s.f2_name, s.measure_dim);
    FunctionModel W = preset(s.W_name, s.target_dim * (is1d ? 1 : 2));
    BoxNd f2box{Vec(static_cast<std::size_t>(s.measure_dim), -16.0), Vec(static_cast<std::size_t>(s.measure_dim), 16.0)};
    BoxNd wbox{Vec(static_cast<std::size_t>(W.dimension), -16.0), Vec(static_cast<std::size_t>(W.dimension), 16.0)};
    EnvelopeTable f2env = convex_envelope(f2, f2box, 513);
    EnvelopeTable Wenv = convex_envelope(W, wbox, is1d ? 513 : 65);
    double f1min = f1_minimum(f1).first;

    BV1D u1;
    Measure1D v1;
    MeshField u2;
    NdMeasure v2;
    if (!s.u_doc.empty()) {
        auto text = read_file(s.base_dir / s.u_doc);
        if (is1d) u1 = parse_bv(text);
        else u2 = parse_field(text);
    }
    if (!s.v_doc.empty()) {
        auto text = read_file(s.base_dir / s.v_doc);
        if (is1d) v1 = parse_measure(text);
        else v2 = parse_ndmeasure(text);
    }

    int rc = 0;
    std::vector<std::function<void()>> work;
    std::mutex rc_mutex;
    auto flag_numerical = [&] {
        std::lock_guard<std::mutex> lk(rc_mutex);
        rc = std::max(rc, 3);
    };

    for (const auto& task : s.tasks) {
        if (task == "evaluate") {
            work.push_back([&, task] {
                EnergyReport rep = is1d ? evaluate_relaxed_1d(f1, f2env, Wenv, f1min, u1, v1)
                                        : evaluate_relaxed_nd(f1, f2env, Wenv, f1min, u2, v2);
                write_file_atomic(out("_report.kv"), detail::energy_report_kv(rep));
                write_file_atomic(out("_report.csv"), detail::energy_report_csv(s.name, rep));
            });
        } else if (task == "cell") {
            work.push_back([&, task] {
                auto cell = solve_cell_fw0(f1, f2env, Wenv, s.cell_aplus, s.cell_aminus, s.cell_b, s.cell_mesh);
                KvWriter kv;
                kv.add("value", cell.value);
                kv.add("direct_value", cell.direct_value);
                kv.add("scan_value", cell.scan_value);
                for (std::size_t i = 0; i < cell.z_star.size(); ++i) kv.add("z_star_" + std::to_string(i), cell.z_star[i]);
                kv.add("disagreement", cell.disagreement ? "1" : "0");
                write_file_atomic(out("_cell.kv"), kv.str());
                CsvWriter prof;
                prof.header = {"y", "u", "v"};
                for (std::size_t i = 0; i < cell.nodes.size(); ++i)
                    prof.add_row({cell.nodes[i], cell.u_profile[i][0],
                                  i < cell.v_profile.size() ? cell.v_profile[i][0] : 0.0});
                write_file_atomic(out("_cell_profile.csv"), prof.str());
                if (cell.disagreement) flag_numerical();
            });
        } else if (task == "g_table") {
            work.push_back([&, task] {
                CsvWriter csv;
                csv.header = {"a", "b", "g"};
                for (double a : s.g_table_a)
                    for (double b : s.g_table_b)
                        csv.add_row({a, b, g_density(f1, f2env, f1min, Vec(static_cast<std::size_t>(s.target_dim), a),
                                                     Vec(static_cast<std::size_t>(s.measure_dim), b))});
                write_file_atomic(out("_gtable.csv"), csv.str());
            });
        } else if (task == "recover" || task == "probe" || task == "concentration") {
            work.push_back([&, task] {
                std::vector<double> eps = s.probe_eps;
                if (eps.empty()) {
                    for (int e = 2; e <= 7; ++e) eps.push_back(std::ldexp(1.0, -e));
                }
                if (is1d) {
                    double x0 = !v1.atoms.empty() ? v1.atoms.front().x
                                                  : (!u1.jumps.empty() ? u1.jumps.front().x : 0.5 * (u1.interval.lo + u1.interval.hi));
                    auto cell = solve_cell_fw0(f1, f2env, Wenv, u1.trace(x0, Side::right), u1.trace(x0, Side::left),
                                               v1.atom_at(x0), s.cell_mesh);
                    if (cell.disagreement) flag_numerical();
                    Generator1D gen = [&](double p) { return build_recovery_1d_jump(u1, v1, x0, p, cell, f1, f2, W); };
                    auto rep = gamma_probe_1d(f1, f2, W, f2env, Wenv, f1min, u1, v1, gen, eps, s.probe_tol,
                                              s.battery_tol, s.seed);
                    if (task == "probe" && !rep.weakstar_ok) flag_numerical();
                    write_file_atomic(out("_" + task + ".csv"), detail::probe_csv(rep));
                    if (task == "concentration") {
                        std::vector<SequencePair> pairs;
                        for (double p : eps) pairs.push_back(gen(p));
                        auto det = concentration_detector(pairs, {1.0, 4.0, 16.0, 64.0});
                        KvWriter kv;
                        kv.add("purely_concentrating", det.purely_concentrating ? "1" : "0");
                        write_file_atomic(out("_concentration.kv"), kv.str());
                    }
                    if (opt.svg) {
                        std::vector<double> energies;
                        for (const auto& r : rep.rows) energies.push_back(r.energy);
                        write_file_atomic(out("_trace.svg"), detail::energy_trace_svg(eps, energies, rep.relaxed_value));
                    }
                } else {
                    double relaxed = evaluate_relaxed_nd(f1, f2env, Wenv, f1min, u2, v2).total;
                    GeneratorNd gen = [&](double p) {
                        return build_recovery_nd(f1, f2, W, f2env, f1min, u2, v2, 1e-6, p, p);
                    };
                    if (task == "probe") {
                        auto rep = gamma_probe_nd(f1, f2, W, f2env, Wenv, f1min, u2, v2, gen, eps, s.probe_tol,
                                                  s.battery_tol, s.seed);
                        if (!rep.weakstar_ok) flag_numerical();
                        write_file_atomic(out("_probe.csv"), detail::probe_csv(rep));
                        if (opt.svg) {
                            std::vector<double> energies;
                            for (const auto& r : rep.rows) energies.push_back(r.energy);
                            write_file_atomic(out("_trace.svg"),
                                              detail::energy_trace_svg(eps, energies, rep.relaxed_value));
                        }
                        return;
                    }
                    std::vector<SequencePairNd> pairs;
                    CsvWriter csv;
                    csv.header = {"k", "eps", "delta", "eta", "energy", "relaxed_value", "gap", "support_measure", "mass"};
                    for (std::size_t i = 0; i < eps.size(); ++i) {
                        auto sp = gen(eps[i]);
                        pairs.push_back(sp);
                        csv.add_row({static_cast<double>(i), sp.param, eps[i], 1e-6, sp.energy, relaxed,
                                     sp.energy - relaxed, sp.v_support, sp.conc_mass});
                    }
                    write_file_atomic(out("_" + task + ".csv"), csv.str());
                    if (task == "concentration") {
                        auto det = concentration_detector_nd(pairs, {1.0, 4.0, 16.0, 64.0});
                        KvWriter kv;
                        kv.add("purely_concentrating", det.purely_concentrating ? "1" : "0");
                        write_file_atomic(out("_concentration.kv"), kv.str());
                    }
                    if (opt.svg) {
                        std::vector<double> energies;
                        for (const auto& p : pairs) energies.push_back(p.energy);
                        write_file_atomic(out("_trace.svg"), detail::energy_trace_svg(eps, energies, relaxed));
                    }
                }
            });
        }
    }

    try {
        if (opt.jobs > 1) {
            std::vector<std::future<void>> futs;
            for (auto& w : work) futs.push_back(std::async(std::launch::async, w));
            for (auto& f : futs) f.get();
        } else {
            for (auto& w : work) w();
        }
    } catch (const numerical_error& e) {
        log << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        log << "validation failure: " << e.what() << "\n";
        return 2;
    }
    return rc;
}

}  // namespace relaxkit
