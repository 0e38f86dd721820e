#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace tdse {

using Date = std::chrono::sys_days;

/// Parses an ISO-8601 calendar date (YYYY-MM-DD). Throws Error(MalformedRow).
Date parse_date(std::string_view text);
std::string format_date(Date d);

/// Months since year 0; consecutive calendar months differ by one.
int month_index(Date d);

}  // namespace tdse
