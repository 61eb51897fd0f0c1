#pragma once

#include "appropo/mdp.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace appropo {

/// Parse failure carrying the source name and 1-based line number.
class ParseError : public Error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& message);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/**
 * MDP description text format. Sections may appear in any order; `#` starts a
 * comment; blank lines are ignored.
 *
 *   [states]   N
 *   [actions]  A
 *   [beta]     N probabilities on one line
 *   [P]        one line per (s, a):  s a p_0 ... p_{N-1}
 *   [Z]        one line per (s, a):  s a z_1 ... z_d
 *              or, for a finite-support measurement, several lines
 *                                    s a @prob z_1 ... z_d
 *   [gamma]    discount in (0, 1)
 *   [bound]    optional measurement norm bound (computed when omitted)
 */
VectorMDP parse_mdp(std::istream& in, const std::string& source = "<input>");
VectorMDP read_mdp_file(const std::string& path);

/// Writes the text format with 17 significant digits.
void write_mdp(std::ostream& out, const VectorMDP& mdp);

/// CSV with header z_0..z_{d-1} and one row per vector, 17 significant digits.
void write_measurements_csv(std::ostream& out, const std::vector<Vec>& rows);

}  // namespace appropo
