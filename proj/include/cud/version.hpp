#pragma once

namespace cud {

inline constexpr const char* kArtifactVersion = "0.1.0";
inline constexpr int kReportSchemaVersion = 1;

}  // namespace cud
