#include "m6cast/dates.hpp"

#include <cstdio>
#include <stdexcept>

namespace m6cast::dates {

namespace {

// Howard Hinnant's civil-date algorithms.
long days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

void civil_from_days(long z, int& y, int& m, int& d) {
  z += 719468;
  const long era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const long yy = static_cast<long>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

bool parse_iso(const std::string& iso, int& y, int& m, int& d) {
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
    if (iso[i] < '0' || iso[i] > '9') return false;
  y = std::stoi(iso.substr(0, 4));
  m = std::stoi(iso.substr(5, 2));
  d = std::stoi(iso.substr(8, 2));
  if (m < 1 || m > 12 || d < 1 || d > 31) return false;
  return true;
}

}  // namespace

bool valid_iso_date(const std::string& iso) {
  int y, m, d;
  return parse_iso(iso, y, m, d);
}

long days_from_iso(const std::string& iso) {
  int y, m, d;
  if (!parse_iso(iso, y, m, d))
    throw std::invalid_argument("not an ISO-8601 date: '" + iso + "'");
  return days_from_civil(y, m, d);
}

std::string iso_from_days(long days) {
  int y, m, d;
  civil_from_days(days, y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
  return buf;
}

std::vector<std::string> weekday_calendar(const std::string& start, int count) {
  if (count < 0) throw std::invalid_argument("weekday_calendar: negative count");
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(count));
  long z = days_from_iso(start);
  while (static_cast<int>(out.size()) < count) {
    // 1970-01-01 was a Thursday; weekday(z) = (z + 4) mod 7, Sunday = 0.
    const long wd = ((z + 4) % 7 + 7) % 7;
    if (wd != 0 && wd != 6) out.push_back(iso_from_days(z));
    ++z;
  }
  return out;
}

}  // namespace m6cast::dates
