#pragma once

#include <string>
#include <vector>

namespace m6cast::dates {

/// Inclusive ISO-8601 date range. ISO dates compare correctly as strings.
struct DateRange {
  std::string first;
  std::string last;

  [[nodiscard]] bool contains(const std::string& iso) const {
    return iso >= first && iso <= last;
  }
};

bool valid_iso_date(const std::string& iso);

/// Days since 1970-01-01 for an ISO date (proleptic Gregorian).
long days_from_iso(const std::string& iso);

std::string iso_from_days(long days);

/// `count` consecutive weekdays starting at the first weekday >= start.
/// Used to give synthetic panels a plausible trading calendar.
std::vector<std::string> weekday_calendar(const std::string& start, int count);

}  // namespace m6cast::dates
