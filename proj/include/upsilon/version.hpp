#pragma once

namespace upsilon {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kReportSchema = "upsilon-report/1";

}  // namespace upsilon
