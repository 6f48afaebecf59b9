// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace gspoison {

inline constexpr int kExitOk = 0;
inline constexpr int kExitAttackFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInternal = 3;

/// Entry point of the `gspoison` tool; returns the process exit code.
int run_cli(int argc, const char* const* argv);

} // namespace gspoison
