#pragma once

namespace qmem {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kReportSchemaVersion = 1;
inline constexpr int kMapFileVersion = 1;
inline constexpr int kMeshFileVersion = 1;

}  // namespace qmem
