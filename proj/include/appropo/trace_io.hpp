#pragma once

#include "appropo/appropo.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace appropo {

/// Column names of trace.csv for measurement dimension d (lambda may be longer).
std::vector<std::string> trace_columns(std::size_t lambda_dim, std::size_t z_dim);

/// One row per iteration: t, lambda_*, zhat_*, loss, running_distance, cache_hit.
void write_trace_csv(std::ostream& out, const RunTrace& trace);

/// Running distance against iteration as a standalone SVG document.
void write_distance_svg(std::ostream& out, const RunTrace& trace, const std::string& title);

}  // namespace appropo
