#include "appropo/trace_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace appropo {

std::vector<std::string> trace_columns(std::size_t lambda_dim, std::size_t z_dim) {
    std::vector<std::string> cols{"t"};
    for (std::size_t i = 0; i < lambda_dim; ++i) cols.push_back("lambda_" + std::to_string(i));
    for (std::size_t i = 0; i < z_dim; ++i) cols.push_back("zhat_" + std::to_string(i));
    cols.insert(cols.end(), {"loss", "running_distance", "cache_hit"});
    return cols;
}

void write_trace_csv(std::ostream& out, const RunTrace& trace) {
    const std::size_t nl = trace.records.empty() ? 0 : static_cast<std::size_t>(trace.records.front().lambda.size());
    const std::size_t nz = trace.records.empty() ? 0 : static_cast<std::size_t>(trace.records.front().z_hat.size());
    const auto cols = trace_columns(nl, nz);
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    for (const auto& r : trace.records) {
        out << r.t;
        for (Eigen::Index i = 0; i < r.lambda.size(); ++i) out << ',' << format_double(r.lambda(i));
        for (Eigen::Index i = 0; i < r.z_hat.size(); ++i) out << ',' << format_double(r.z_hat(i));
        out << ',' << format_double(r.loss) << ',' << format_double(r.running_distance) << ',' << (r.cache_hit ? 1 : 0)
            << '\n';
    }
}

void write_distance_svg(std::ostream& out, const RunTrace& trace, const std::string& title) {
    constexpr double width = 640, height = 400, left = 70, right = 20, top = 40, bottom = 50;
    const double pw = width - left - right;
    const double ph = height - top - bottom;
    const std::size_t n = trace.records.size();
    double ymax = 0.0;
    for (const auto& r : trace.records)
        if (std::isfinite(r.running_distance)) ymax = std::max(ymax, r.running_distance);
    if (ymax <= 0.0) ymax = 1.0;
    char buf[128];
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">";
    for (char c : title) {
        if (c == '<') out << "&lt;";
        else if (c == '&') out << "&amp;";
        else out << c;
    }
    out << "</text>\n";
    out << "<g stroke=\"black\" fill=\"none\"><line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw
        << "\" y2=\"" << top + ph << "\"/><line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
        << top + ph << "\"/></g>\n";
    std::snprintf(buf, sizeof buf, "%.4g", ymax);
    out << "<g font-family=\"sans-serif\" font-size=\"11\"><text x=\"" << left - 6 << "\" y=\"" << top + 4
        << "\" text-anchor=\"end\">" << buf << "</text><text x=\"" << left - 6 << "\" y=\"" << top + ph + 4
        << "\" text-anchor=\"end\">0</text><text x=\"" << left << "\" y=\"" << top + ph + 18 << "\">1</text><text x=\""
        << left + pw << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"end\">" << n << "</text><text x=\""
        << left + pw / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">iteration</text><text x=\"16\" y=\""
        << top + ph / 2 << "\" transform=\"rotate(-90 16 " << top + ph / 2
        << ")\" text-anchor=\"middle\">running distance</text></g>\n";
    if (n > 0) {
        out << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
        // at most ~2000 points keeps files small for long runs
        const std::size_t stride = std::max<std::size_t>(1, n / 2000);
        for (std::size_t i = 0; i < n; i += stride) {
            const double v = trace.records[i].running_distance;
            if (!std::isfinite(v)) continue;
            const double x = left + (n > 1 ? pw * static_cast<double>(i) / static_cast<double>(n - 1) : 0.0);
            const double y = top + ph * (1.0 - v / ymax);
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", x, y);
            out << buf;
        }
        out << "\"/>\n";
    }
    out << "</svg>\n";
}

}  // namespace appropo
