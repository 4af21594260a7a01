#pragma once

namespace wdq {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kReportSchema = "wdq-report/1";

}  // namespace wdq
