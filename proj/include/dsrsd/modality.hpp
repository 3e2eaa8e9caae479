#pragma once

#include <string>
#include <string_view>

namespace dsrsd {

enum class Modality { kA, kB };

inline std::string_view modality_name(Modality m) { return m == Modality::kA ? "A" : "B"; }

/// Accepts "A"/"B" (case-insensitive); anything else is a ConfigError.
Modality parse_modality(std::string_view name);

}  // namespace dsrsd
