#include "appropo/mdp_io.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

namespace appropo {

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& message)
    : Error(source + ":" + std::to_string(line) + ": " + message), line_(line) {}

namespace {

struct Line {
    std::size_t number;
    std::vector<std::string> tokens;
};

double to_double(const std::string& tok, const std::string& source, std::size_t line) {
    try {
        std::size_t used = 0;
        double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ParseError(source, line, "expected a number, got '" + tok + "'");
    }
}

std::size_t to_index(const std::string& tok, const std::string& source, std::size_t line) {
    const double v = to_double(tok, source, line);
    if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v)))
        throw ParseError(source, line, "expected a nonnegative integer, got '" + tok + "'");
    return static_cast<std::size_t>(v);
}

const std::vector<Line>& section(const std::map<std::string, std::vector<Line>>& sections, const std::string& name,
                                 const std::string& source) {
    auto it = sections.find(name);
    if (it == sections.end() || it->second.empty()) throw ParseError(source, 0, "missing section [" + name + "]");
    return it->second;
}

double scalar_section(const std::map<std::string, std::vector<Line>>& sections, const std::string& name,
                      const std::string& source) {
    const auto& lines = section(sections, name, source);
    if (lines.size() != 1 || lines[0].tokens.size() != 1)
        throw ParseError(source, lines[0].number, "section [" + name + "] must hold a single value");
    return to_double(lines[0].tokens[0], source, lines[0].number);
}

}  // namespace

VectorMDP parse_mdp(std::istream& in, const std::string& source) {
    std::map<std::string, std::vector<Line>> sections;
    std::map<std::string, std::size_t> header_line;
    std::string current;
    std::string raw;
    std::size_t number = 0;
    while (std::getline(in, raw)) {
        ++number;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        std::istringstream ls(raw);
        std::vector<std::string> tokens;
        for (std::string tok; ls >> tok;) tokens.push_back(tok);
        if (tokens.empty()) continue;
        if (tokens[0].front() == '[') {
            if (tokens.size() != 1 || tokens[0].back() != ']')
                throw ParseError(source, number, "malformed section header");
            current = tokens[0].substr(1, tokens[0].size() - 2);
            static const char* known[] = {"states", "actions", "beta", "P", "Z", "gamma", "bound"};
            if (std::find(std::begin(known), std::end(known), current) == std::end(known))
                throw ParseError(source, number, "unknown section [" + current + "]");
            if (header_line.count(current)) throw ParseError(source, number, "duplicate section [" + current + "]");
            header_line[current] = number;
            sections[current];
            continue;
        }
        if (current.empty()) throw ParseError(source, number, "data before the first section header");
        sections[current].push_back({number, std::move(tokens)});
    }

    const double ns_raw = scalar_section(sections, "states", source);
    const double na_raw = scalar_section(sections, "actions", source);
    if (ns_raw < 1 || na_raw < 1 || ns_raw != static_cast<double>(static_cast<std::size_t>(ns_raw)) ||
        na_raw != static_cast<double>(static_cast<std::size_t>(na_raw)))
        throw ParseError(source, header_line["states"], "state and action counts must be positive integers");
    const auto ns = static_cast<std::size_t>(ns_raw);
    const auto na = static_cast<std::size_t>(na_raw);
    const double gamma = scalar_section(sections, "gamma", source);
    std::optional<double> bound;
    if (sections.count("bound")) bound = scalar_section(sections, "bound", source);

    const auto& beta_lines = section(sections, "beta", source);
    std::vector<double> beta_vals;
    for (const auto& l : beta_lines)
        for (const auto& t : l.tokens) beta_vals.push_back(to_double(t, source, l.number));
    if (beta_vals.size() != ns)
        throw ParseError(source, beta_lines[0].number,
                         "[beta] has " + std::to_string(beta_vals.size()) + " entries, expected " + std::to_string(ns));
    Vec beta = Eigen::Map<Vec>(beta_vals.data(), static_cast<Eigen::Index>(ns));

    const auto rows = static_cast<Eigen::Index>(ns * na);
    Mat p = Mat::Zero(rows, static_cast<Eigen::Index>(ns));
    std::vector<bool> p_seen(ns * na, false);
    for (const auto& l : section(sections, "P", source)) {
        if (l.tokens.size() != ns + 2)
            throw ParseError(source, l.number, "[P] line must be 's a' followed by " + std::to_string(ns) + " probabilities");
        const auto s = to_index(l.tokens[0], source, l.number);
        const auto a = to_index(l.tokens[1], source, l.number);
        if (s >= ns || a >= na) throw ParseError(source, l.number, "state or action index out of range");
        if (p_seen[s * na + a]) throw ParseError(source, l.number, "duplicate [P] row");
        p_seen[s * na + a] = true;
        for (std::size_t j = 0; j < ns; ++j)
            p(static_cast<Eigen::Index>(s * na + a), static_cast<Eigen::Index>(j)) = to_double(l.tokens[j + 2], source, l.number);
    }
    for (std::size_t r = 0; r < ns * na; ++r)
        if (!p_seen[r])
            throw ParseError(source, header_line["P"],
                             "[P] missing row for s=" + std::to_string(r / na) + " a=" + std::to_string(r % na));

    const auto& z_lines = section(sections, "Z", source);
    std::size_t d = 0;
    std::vector<std::optional<Vec>> means(ns * na);
    std::vector<std::vector<MeasurementOutcome>> noise(ns * na);
    bool any_noise = false;
    for (const auto& l : z_lines) {
        if (l.tokens.size() < 3) throw ParseError(source, l.number, "[Z] line too short");
        const auto s = to_index(l.tokens[0], source, l.number);
        const auto a = to_index(l.tokens[1], source, l.number);
        if (s >= ns || a >= na) throw ParseError(source, l.number, "state or action index out of range");
        const bool is_noise = l.tokens[2].front() == '@';
        const std::size_t first = is_noise ? 3 : 2;
        const std::size_t this_d = l.tokens.size() - first;
        if (this_d == 0) throw ParseError(source, l.number, "[Z] line has no measurement values");
        if (d == 0) d = this_d;
        if (this_d != d)
            throw ParseError(source, l.number, "measurement has " + std::to_string(this_d) + " entries, expected " + std::to_string(d));
        Vec z(static_cast<Eigen::Index>(d));
        for (std::size_t j = 0; j < d; ++j) z(static_cast<Eigen::Index>(j)) = to_double(l.tokens[first + j], source, l.number);
        const std::size_t r = s * na + a;
        if (is_noise) {
            if (means[r]) throw ParseError(source, l.number, "(s, a) mixes deterministic and noisy measurement lines");
            const double prob = to_double(l.tokens[2].substr(1), source, l.number);
            noise[r].push_back({prob, std::move(z)});
            any_noise = true;
        } else {
            if (means[r] || !noise[r].empty()) throw ParseError(source, l.number, "duplicate [Z] entry");
            means[r] = std::move(z);
        }
    }
    Mat mean(rows, static_cast<Eigen::Index>(d));
    for (std::size_t r = 0; r < ns * na; ++r) {
        if (means[r]) {
            mean.row(static_cast<Eigen::Index>(r)) = means[r]->transpose();
        } else if (!noise[r].empty()) {
            Vec m = Vec::Zero(static_cast<Eigen::Index>(d));
            for (const auto& o : noise[r]) m += o.prob * o.z;
            mean.row(static_cast<Eigen::Index>(r)) = m.transpose();
        } else {
            throw ParseError(source, header_line["Z"],
                             "[Z] missing entry for s=" + std::to_string(r / na) + " a=" + std::to_string(r % na));
        }
    }
    if (!any_noise) noise.clear();
    try {
        return VectorMDP(std::move(beta), std::move(p), std::move(mean), gamma, bound, std::move(noise));
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError(source, 0, e.what());
    }
}

VectorMDP read_mdp_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open MDP file '" + path + "'");
    return parse_mdp(in, path);
}

void write_mdp(std::ostream& out, const VectorMDP& mdp) {
    const std::size_t ns = mdp.num_states();
    const std::size_t na = mdp.num_actions();
    out << "[states]\n" << ns << "\n[actions]\n" << na << "\n[gamma]\n" << format_double(mdp.gamma())
        << "\n[bound]\n" << format_double(mdp.bound()) << "\n[beta]\n";
    for (std::size_t s = 0; s < ns; ++s) out << (s ? " " : "") << format_double(mdp.initial_dist()(static_cast<Eigen::Index>(s)));
    out << "\n[P]\n";
    for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t a = 0; a < na; ++a) {
            out << s << ' ' << a;
            const auto row = mdp.next_state_probs(s, a);
            for (Eigen::Index j = 0; j < row.size(); ++j) out << ' ' << format_double(row(j));
            out << '\n';
        }
    out << "[Z]\n";
    for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t a = 0; a < na; ++a) {
            const auto support = mdp.noise(s, a);
            if (support.empty()) {
                out << s << ' ' << a;
                const auto z = mdp.measurement(s, a);
                for (Eigen::Index j = 0; j < z.size(); ++j) out << ' ' << format_double(z(j));
                out << '\n';
            } else {
                for (const auto& o : support) {
                    out << s << ' ' << a << " @" << format_double(o.prob);
                    for (Eigen::Index j = 0; j < o.z.size(); ++j) out << ' ' << format_double(o.z(j));
                    out << '\n';
                }
            }
        }
}

void write_measurements_csv(std::ostream& out, const std::vector<Vec>& rows) {
    if (rows.empty()) return;
    const auto d = rows.front().size();
    for (Eigen::Index j = 0; j < d; ++j) out << (j ? "," : "") << "z_" << j;
    out << '\n';
    for (const auto& r : rows) {
        if (r.size() != d) throw DimensionError("write_measurements_csv: rows have different dimensions");
        for (Eigen::Index j = 0; j < d; ++j) out << (j ? "," : "") << format_double(r(j));
        out << '\n';
    }
}

}  // namespace appropo
