// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string_view>

namespace gspoison {

enum class LogLevel { Quiet, Warning, Info };

void set_log_level(LogLevel level);
LogLevel log_level();
void log_warning(std::string_view msg);
void log_info(std::string_view msg);

} // namespace gspoison
