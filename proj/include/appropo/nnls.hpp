#pragma once

#include "appropo/common.hpp"

namespace appropo {

/// Nonnegative least squares min ||A x - b|| s.t. x >= 0 (Lawson-Hanson active set).
Vec nnls(const Mat& a, const Vec& b, int max_iterations = 0);

}  // namespace appropo
