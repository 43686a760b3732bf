#pragma once

namespace beamlab {

inline constexpr const char* version() { return "1.0.0"; }

}  // namespace beamlab
