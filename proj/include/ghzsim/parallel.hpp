#pragma once

namespace ghz {

/// Selects between the OpenMP kernel and the serial reference path. Both
/// produce bit-identical results; the serial path is kept for testing and
/// benchmarking.
enum class ExecPolicy { serial, parallel };

/// Number of OpenMP threads available (1 without OpenMP).
int max_threads() noexcept;

}  // namespace ghz
