#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gridrisk/errors.hpp"
#include "gridrisk/model.hpp"

namespace gridrisk {

struct ParseOptions {
    double short_rating_multiplier = 1.2;  // rating_short when rate C is absent
    double default_outage_rate = 1.0;      // outages/year when no reliability row
    double shed_cost = 1e4;                // $/MWh applied to every load
};

namespace detail {

inline std::string strip_comment(std::string_view line) {
    const size_t pos = line.find('%');
    if (pos != std::string_view::npos) line = line.substr(0, pos);
    std::string s(line);
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline double parse_number(const std::string& tok, int line_no) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') {
        throw ParseError(line_no, "bad number '" + tok + "'");
    }
    return v;
}

inline std::vector<double> parse_row(const std::string& chunk, int line_no) {
    std::vector<double> out;
    std::istringstream ss(chunk);
    std::string tok;
    while (ss >> tok) out.push_back(parse_number(tok, line_no));
    return out;
}

// Shortest decimal representation that parses back to the same double.
inline std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.15g", v);
    if (std::strtod(buf, nullptr) != v) std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct RawMatrix {
    std::vector<std::vector<double>> rows;
    std::vector<int> row_lines;  // source line of each row, for error messages
};

}  // namespace detail

// Parses the MATPOWER-style subset documented in docs/case_format.md: scalar
// assignments (baseMVA, optional load_factor), the bus/gen/branch/gencost
// matrices, and the optional branch_reliability extension. The result is
// validated and indexed.
inline GridCase parse_case(const std::string& text, const ParseOptions& opt = {}) {
    GridCase gc;
    gc.loads.clear();
    bool saw_bus = false, saw_branch = false, saw_gen = false;

    std::unordered_map<std::string, detail::RawMatrix> matrices;

    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    std::string current;  // matrix being filled, empty when outside
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = detail::strip_comment(raw);
        if (line.empty()) continue;

        if (current.empty()) {
            if (line.rfind("function", 0) == 0) {
                const size_t eq = line.find('=');
                if (eq != std::string::npos) {
                    std::string nm = detail::strip_comment(line.substr(eq + 1));
                    if (!nm.empty() && nm.back() == ';') nm.pop_back();
                    gc.name = detail::strip_comment(nm);
                }
                continue;
            }
            if (line.rfind("mpc.", 0) != 0) {
                throw ParseError(line_no, "unrecognized statement '" + line + "'");
            }
            const size_t eq = line.find('=');
            if (eq == std::string::npos) throw ParseError(line_no, "expected '='");
            std::string key = detail::strip_comment(line.substr(4, eq - 4));
            std::string rhs = detail::strip_comment(line.substr(eq + 1));
            if (rhs.rfind('[', 0) == 0) {
                current = key;
                matrices[current];  // creates the entry even if the body is empty
                rhs = detail::strip_comment(rhs.substr(1));
                if (rhs.empty()) continue;
                // fall through to body handling below with the same-line content
                line = rhs;
            } else {
                if (!rhs.empty() && rhs.back() == ';') rhs.pop_back();
                rhs = detail::strip_comment(rhs);
                if (key == "version") continue;  // quoted string, ignored
                if (key == "baseMVA") gc.mva_base = detail::parse_number(rhs, line_no);
                else if (key == "load_factor") gc.load_factor = detail::parse_number(rhs, line_no);
                // unknown scalar keys are ignored for forward compatibility
                continue;
            }
        }

        // Inside a matrix body.
        bool closing = false;
        const size_t close = line.find(']');
        if (close != std::string::npos) {
            closing = true;
            line = line.substr(0, close);
        }
        std::string chunk;
        std::istringstream rows(line);
        while (std::getline(rows, chunk, ';')) {
            chunk = detail::strip_comment(chunk);
            if (chunk.empty()) continue;
            auto& m = matrices[current];
            m.rows.push_back(detail::parse_row(chunk, line_no));
            m.row_lines.push_back(line_no);
        }
        if (closing) current.clear();
    }
    if (!current.empty()) throw ParseError(line_no, "matrix 'mpc." + current + "' never closed");

    // --- bus matrix ---------------------------------------------------------
    if (auto it = matrices.find("bus"); it != matrices.end()) {
        saw_bus = true;
        for (size_t r = 0; r < it->second.rows.size(); ++r) {
            const auto& row = it->second.rows[r];
            const int ln = it->second.row_lines[r];
            if (row.size() < 13) throw ParseError(ln, "bus row needs 13 columns");
            Bus b;
            b.id = static_cast<int>(row[0]);
            b.bus_type = static_cast<int>(row[1]);
            b.area = static_cast<int>(row[6]);
            b.base_kv = row[9];
            gc.buses.push_back(b);
            if (row[2] != 0.0) {
                gc.loads.push_back({b.id, row[2], opt.shed_cost});
            }
        }
    }

    // --- gen + gencost ------------------------------------------------------
    std::vector<std::vector<double>> gen_rows, cost_rows;
    if (auto it = matrices.find("gen"); it != matrices.end()) {
        saw_gen = true;
        for (size_t r = 0; r < it->second.rows.size(); ++r) {
            if (it->second.rows[r].size() < 10) {
                throw ParseError(it->second.row_lines[r], "gen row needs 10 columns");
            }
            gen_rows.push_back(it->second.rows[r]);
        }
    }
    if (auto it = matrices.find("gencost"); it != matrices.end()) {
        cost_rows = it->second.rows;
        if (cost_rows.size() == 2 * gen_rows.size()) {
            cost_rows.resize(gen_rows.size());  // drop reactive-power cost rows
        }
        if (cost_rows.size() != gen_rows.size()) {
            throw ParseError(1, "gencost has " + std::to_string(cost_rows.size()) +
                                    " rows for " + std::to_string(gen_rows.size()) +
                                    " generators");
        }
    } else if (!gen_rows.empty()) {
        throw ParseError(1, "gen matrix present but gencost missing");
    }
    for (size_t r = 0; r < gen_rows.size(); ++r) {
        const auto& g = gen_rows[r];
        if (g[7] <= 0) continue;  // out-of-service unit, dropped
        const auto& c = cost_rows[r];
        if (c.size() < 5 || static_cast<int>(c[0]) != 2) {
            throw ParseError(1, "generator " + std::to_string(r + 1) +
                                    ": only polynomial cost (model 2) is supported");
        }
        const int n = static_cast<int>(c[3]);
        double c1 = 0.0;
        if (n == 2 && c.size() >= 6) c1 = c[4];
        else if (n == 3 && c.size() >= 7) {
            if (c[4] != 0.0) {
                throw ParseError(1, "generator " + std::to_string(r + 1) +
                                        ": quadratic cost term unsupported");
            }
            c1 = c[5];
        } else {
            throw ParseError(1, "generator " + std::to_string(r + 1) + ": bad gencost row");
        }
        gc.generators.push_back({static_cast<int>(g[0]), g[1], g[8], c1});
    }

    // --- branch matrix ------------------------------------------------------
    if (auto it = matrices.find("branch"); it != matrices.end()) {
        saw_branch = true;
        for (size_t r = 0; r < it->second.rows.size(); ++r) {
            const auto& row = it->second.rows[r];
            const int ln = it->second.row_lines[r];
            if (row.size() < 11) throw ParseError(ln, "branch row needs 11 columns");
            Branch b;
            b.from_bus = static_cast<int>(row[0]);
            b.to_bus = static_cast<int>(row[1]);
            b.resistance = row[2];
            b.reactance = row[3];
            b.charging = row[4];
            const double rate_a = row[5], rate_c = row[7];
            b.rating_mid = row[6];
            if (rate_a <= 0) {
                b.rating_long = kUnlimitedRating;
                b.rating_short = kUnlimitedRating;
            } else {
                b.rating_long = rate_a;
                b.rating_short = rate_c > 0 ? rate_c : opt.short_rating_multiplier * rate_a;
            }
            b.ratio = row[8];
            b.angle_shift = row[9];
            b.in_service = row[10] != 0.0;
            b.outage_rate = opt.default_outage_rate;
            gc.branches.push_back(b);
        }
    }

    // --- optional reliability extension -------------------------------------
    if (auto it = matrices.find("branch_reliability"); it != matrices.end()) {
        for (size_t r = 0; r < it->second.rows.size(); ++r) {
            const auto& row = it->second.rows[r];
            const int ln = it->second.row_lines[r];
            if (row.size() < 2) throw ParseError(ln, "branch_reliability row needs 2 columns");
            const int idx = static_cast<int>(row[0]);
            if (idx < 1 || idx > static_cast<int>(gc.branches.size())) {
                throw ParseError(ln, "branch_reliability index " + std::to_string(idx) +
                                         " out of range");
            }
            if (row[1] < 0) throw ParseError(ln, "negative outage rate");
            gc.branches[idx - 1].outage_rate = row[1];
        }
    }

    if (!saw_bus) throw ParseError(line_no, "case has no bus matrix");
    if (!saw_gen || !saw_branch) {
        throw ParseError(line_no, "case is missing a gen or branch matrix");
    }
    validate(gc);
    return gc;
}

// Canonical text form: fixed column sets, tab separation, shortest exact
// number formatting. parse_case(serialize_case(gc)) reproduces gc element by
// element (loads merged to one per bus, as the parser would produce).
inline std::string serialize_case(const GridCase& gc) {
    using detail::format_number;
    std::ostringstream out;
    out << "function mpc = " << gc.name << "\n";
    out << "mpc.version = '2';\n";
    out << "mpc.baseMVA = " << format_number(gc.mva_base) << ";\n";
    if (gc.load_factor != 1.0) {
        out << "mpc.load_factor = " << format_number(gc.load_factor) << ";\n";
    }

    std::unordered_map<int, double> pd;
    for (const auto& l : gc.loads) pd[l.bus] += l.p_nominal;

    out << "\n%% bus_i type Pd Qd Gs Bs area Vm Va baseKV zone Vmax Vmin\n";
    out << "mpc.bus = [\n";
    for (const auto& b : gc.buses) {
        const auto it = pd.find(b.id);
        out << "\t" << b.id << "\t" << b.bus_type << "\t"
            << format_number(it == pd.end() ? 0.0 : it->second)
            << "\t0\t0\t0\t" << b.area << "\t1\t0\t" << format_number(b.base_kv)
            << "\t1\t1.05\t0.95;\n";
    }
    out << "];\n";

    out << "\n%% bus Pg Qg Qmax Qmin Vg mBase status Pmax Pmin\n";
    out << "mpc.gen = [\n";
    for (const auto& g : gc.generators) {
        out << "\t" << g.bus << "\t" << format_number(g.p_base) << "\t0\t0\t0\t1\t"
            << format_number(gc.mva_base) << "\t1\t" << format_number(g.p_max) << "\t0;\n";
    }
    out << "];\n";

    out << "\n%% fbus tbus r x b rateA rateB rateC ratio angle status\n";
    out << "mpc.branch = [\n";
    for (const auto& b : gc.branches) {
        const double rate_a = b.rating_long >= kUnlimitedRating ? 0.0 : b.rating_long;
        const double rate_c = b.rating_short >= kUnlimitedRating ? 0.0 : b.rating_short;
        out << "\t" << b.from_bus << "\t" << b.to_bus << "\t" << format_number(b.resistance)
            << "\t" << format_number(b.reactance) << "\t" << format_number(b.charging) << "\t"
            << format_number(rate_a) << "\t" << format_number(b.rating_mid) << "\t"
            << format_number(rate_c) << "\t" << format_number(b.ratio) << "\t"
            << format_number(b.angle_shift) << "\t" << (b.in_service ? 1 : 0) << ";\n";
    }
    out << "];\n";

    out << "\n%% model startup shutdown n c1 c0\n";
    out << "mpc.gencost = [\n";
    for (const auto& g : gc.generators) {
        out << "\t2\t0\t0\t2\t" << format_number(g.marginal_cost) << "\t0;\n";
    }
    out << "];\n";

    out << "\n%% branch_index lambda (outages/year)\n";
    out << "mpc.branch_reliability = [\n";
    for (size_t i = 0; i < gc.branches.size(); ++i) {
        out << "\t" << (i + 1) << "\t" << format_number(gc.branches[i].outage_rate) << ";\n";
    }
    out << "];\n";
    return out.str();
}

inline GridCase load_case_file(const std::string& path, const ParseOptions& opt = {}) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw ParseError(0, "cannot open case file '" + path + "'");
    std::string text;
    char buf[1 << 16];
    size_t n;
    while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) text.append(buf, n);
    std::fclose(f);
    try {
        return parse_case(text, opt);
    } catch (ParseError& e) {
        throw ParseError(e.line(), path + ": " + e.what());
    }
}

}  // namespace gridrisk
