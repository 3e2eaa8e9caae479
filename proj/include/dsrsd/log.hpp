#pragma once

#include <string_view>

namespace dsrsd {

/// Warnings go to stderr unless silenced (tests and sweeps silence them).
void log_warning(std::string_view message);
void set_warnings_enabled(bool enabled);

}  // namespace dsrsd
