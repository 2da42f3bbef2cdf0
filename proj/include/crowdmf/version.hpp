#pragma once

namespace crowdmf {

inline constexpr const char* kArtifactVersion = "0.1.0";

}  // namespace crowdmf
