#pragma once

// Test-only fixed-format MPS reader covering the subset write_mps emits.

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "otdet/lp.hpp"

namespace otdet::test_support {

inline lp::LinearProgram read_mps(const std::string& text) {
    using namespace otdet::lp;
    LinearProgram prog(Sense::minimize);
    std::map<std::string, std::size_t> row_index, col_index;
    std::istringstream in(text);
    std::string line, section;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] != ' ') {
            std::istringstream hs(line);
            hs >> section;
            continue;
        }
        std::istringstream ls(line);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (section == "OBJSENSE") {
            if (tok.at(0) == "MAX") prog.set_sense(Sense::maximize);
        } else if (section == "ROWS") {
            if (tok.at(0) == "N") continue;
            const Relation rel = tok[0] == "L" ? Relation::less_equal
                                 : tok[0] == "G" ? Relation::greater_equal : Relation::equal;
            row_index[tok.at(1)] = prog.add_row(rel, 0.0, tok[1]);
        } else if (section == "COLUMNS") {
            auto it = col_index.find(tok.at(0));
            if (it == col_index.end()) it = col_index.emplace(tok[0], prog.add_variable(0.0, kInf, 0.0, tok[0])).first;
            for (std::size_t p = 1; p + 1 < tok.size(); p += 2) {
                const double v = std::stod(tok[p + 1]);
                if (tok[p] == "OBJ") prog.set_cost(it->second, v);
                else prog.add_coefficient(row_index.at(tok[p]), it->second, v);
            }
        } else if (section == "RHS") {
            for (std::size_t p = 1; p + 1 < tok.size(); p += 2) prog.set_rhs(row_index.at(tok[p]), std::stod(tok[p + 1]));
        } else if (section == "BOUNDS") {
            const std::size_t j = col_index.at(tok.at(2));
            const double v = tok.size() > 3 ? std::stod(tok[3]) : 0.0;
            if (tok[0] == "FX") prog.set_bounds(j, v, v);
            else if (tok[0] == "FR") prog.set_bounds(j, -kInf, kInf);
            else if (tok[0] == "MI") prog.set_bounds(j, -kInf, prog.upper()[j]);
            else if (tok[0] == "LO") prog.set_bounds(j, v, prog.upper()[j]);
            else if (tok[0] == "UP") prog.set_bounds(j, prog.lower()[j], v);
        }
    }
    prog.canonicalize();
    return prog;
}

}  // namespace otdet::test_support
