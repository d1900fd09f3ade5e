#pragma once

// Offline stand-in for external location/time services: a city coordinate
// table with great-circle distance, nearby-city lookup, clock-time parsing,
// and the four day periods.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "progslu/errors.hpp"

namespace progslu {

struct City {
  std::string name;  // "Fort Worth,TX"
  double latitude = 0.0;
  double longitude = 0.0;
};

inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kNearbyRadiusKm = 50.0;

// Haversine great-circle distance in kilometers. Operands are grouped so
// that swapping the arguments gives a bitwise-identical result.
inline double geo_distance(const City& a, const City& b) {
  const double rad = M_PI / 180.0;
  const double sl = std::sin(std::fabs(b.latitude - a.latitude) * rad / 2.0);
  const double so = std::sin(std::fabs(b.longitude - a.longitude) * rad / 2.0);
  const double cc = std::cos(a.latitude * rad) * std::cos(b.latitude * rad);
  const double h = std::clamp(sl * sl + so * so * cc, 0.0, 1.0);
  return kEarthRadiusKm * 2.0 * std::atan2(std::sqrt(h), std::sqrt(1.0 - h));
}

namespace detail {

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// "Brooklyn, NY" and "brooklyn,ny" normalize to the same key.
inline std::string city_key(const std::string& name) {
  std::string out;
  for (char c : lower(trim(name))) {
    if (c == ' ' && !out.empty() && out.back() == ',') continue;
    out.push_back(c);
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

// Part before the first comma: the spoken city name.
inline std::string city_base(const std::string& name) {
  std::string key = lower(trim(name));
  std::size_t comma = key.find(',');
  return trim(comma == std::string::npos ? key : key.substr(0, comma));
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.push_back(sep);
    out += parts[i];
  }
  return out;
}

}  // namespace detail

// Immutable after load; all lookups are pure.
class Gazetteer {
 public:
  static Gazetteer from_cities(std::vector<City> cities) {
    Gazetteer g;
    std::sort(cities.begin(), cities.end(),
              [](const City& a, const City& b) { return a.name < b.name; });
    for (const auto& c : cities) {
      if (c.latitude < -90.0 || c.latitude > 90.0)
        throw ValidationError("gazetteer: latitude out of range for " + c.name);
      if (c.longitude < -180.0 || c.longitude > 180.0)
        throw ValidationError("gazetteer: longitude out of range for " + c.name);
      const std::string key = detail::city_key(c.name);
      if (g.by_key_.count(key))
        throw ValidationError("gazetteer: duplicate city name " + c.name);
      g.by_key_[key] = g.cities_.size();
      g.by_base_[detail::city_base(c.name)].push_back(g.cities_.size());
      g.cities_.push_back(c);
    }
    return g;
  }

  // One city per line: name<TAB>lat<TAB>lon.
  static Gazetteer load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("gazetteer: cannot open " + path);
    std::vector<City> cities;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      auto fields = detail::split(line, '\t');
      if (fields.size() != 3)
        throw ParseError("gazetteer: line " + std::to_string(lineno) +
                         ": expected name<TAB>lat<TAB>lon");
      try {
        cities.push_back(City{detail::trim(fields[0]), std::stod(fields[1]),
                              std::stod(fields[2])});
      } catch (const std::exception&) {
        throw ParseError("gazetteer: line " + std::to_string(lineno) +
                         ": bad coordinate");
      }
    }
    return from_cities(std::move(cities));
  }

  const std::vector<City>& cities() const { return cities_; }

  // Full-name match first ("Brooklyn, NY"); then spoken base name
  // ("fort worth"). Ambiguous base names resolve to the first city in name
  // order. Returns nullptr when unknown.
  const City* find(const std::string& name) const {
    auto it = by_key_.find(detail::city_key(name));
    if (it != by_key_.end()) return &cities_[it->second];
    auto bit = by_base_.find(detail::city_base(name));
    if (bit != by_base_.end()) return &cities_[bit->second.front()];
    return nullptr;
  }

  const City& at(const std::string& name) const {
    const City* c = find(name);
    if (!c) throw LookupError("gazetteer: unknown city \"" + name + "\"");
    return *c;
  }

  // All cities other than c within radius_km, sorted by distance then name.
  std::vector<City> nearby(const City& c, double radius_km = kNearbyRadiusKm) const {
    std::vector<std::pair<double, const City*>> hits;
    const std::string key = detail::city_key(c.name);
    for (const auto& other : cities_) {
      if (detail::city_key(other.name) == key) continue;
      const double d = geo_distance(c, other);
      if (d <= radius_km) hits.emplace_back(d, &other);
    }
    std::sort(hits.begin(), hits.end(),
              [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first < b.first;
                return a.second->name < b.second->name;
              });
    std::vector<City> out;
    out.reserve(hits.size());
    for (const auto& [d, city] : hits) out.push_back(*city);
    return out;
  }

  std::vector<City> nearby(const std::string& name,
                           double radius_km = kNearbyRadiusKm) const {
    return nearby(at(name), radius_km);
  }

 private:
  std::vector<City> cities_;
  std::map<std::string, std::size_t> by_key_;
  std::map<std::string, std::vector<std::size_t>> by_base_;
};

// ---------------------------------------------------------------------------
// day periods

struct TimePeriod {
  std::string name;
  int start_minute = 0;  // half-open [start, end)
  int end_minute = 0;
};

// morning 6am-12pm, afternoon 12pm-6pm, evening 6pm-12am, night 12am-6am.
// Half-open intervals make the four periods an exact partition of the day.
inline const std::vector<TimePeriod>& day_periods() {
  static const std::vector<TimePeriod> periods = {
      {"morning", 360, 720},
      {"afternoon", 720, 1080},
      {"evening", 1080, 1440},
      {"night", 0, 360},
  };
  return periods;
}

inline const TimePeriod* find_period(const std::string& name) {
  const std::string key = detail::lower(detail::trim(name));
  for (const auto& p : day_periods())
    if (p.name == key) return &p;
  return nullptr;
}

inline const TimePeriod& period_of_minute(int minute) {
  for (const auto& p : day_periods())
    if (minute >= p.start_minute && minute < p.end_minute) return p;
  throw ArgumentError("period_of_minute: minute " + std::to_string(minute) +
                      " outside [0, 1440)");
}

inline int period_middle(const TimePeriod& p) {
  return (p.start_minute + p.end_minute) / 2;
}

// ---------------------------------------------------------------------------
// clock parsing

// Minutes since midnight from the tokens of a time-valued slot span.
// Recognizes "8 pm" / "8pm", "838 am" (8:38), and bare 4-digit 24h strings
// like "1110". Anything else is nullopt.
inline std::optional<int> parse_time_token(const std::vector<std::string>& span_tokens) {
  std::string digits, suffix;
  for (const auto& tok : span_tokens) {
    for (char c : detail::lower(tok)) {
      if (std::isdigit(static_cast<unsigned char>(c))) {
        if (!suffix.empty()) return std::nullopt;  // digits after am/pm
        digits.push_back(c);
      } else if (std::isalpha(static_cast<unsigned char>(c))) {
        suffix.push_back(c);
      } else if (c != ' ' && c != ':' && c != '.') {
        return std::nullopt;
      }
    }
  }
  if (digits.empty() || digits.size() > 4) return std::nullopt;

  if (suffix == "am" || suffix == "pm") {
    int hour = 0, minute = 0;
    if (digits.size() <= 2) {
      hour = std::stoi(digits);
    } else {
      hour = std::stoi(digits.substr(0, digits.size() - 2));
      minute = std::stoi(digits.substr(digits.size() - 2));
    }
    if (hour < 1 || hour > 12 || minute > 59) return std::nullopt;
    return (hour % 12) * 60 + minute + (suffix == "pm" ? 720 : 0);
  }
  if (!suffix.empty()) return std::nullopt;
  if (digits.size() != 4) return std::nullopt;  // bare digits must be HHMM
  const int hour = std::stoi(digits.substr(0, 2));
  const int minute = std::stoi(digits.substr(2));
  if (hour > 23 || minute > 59) return std::nullopt;
  return hour * 60 + minute;
}

// Circular distance between two minute-of-day stamps, at most 720.
inline int circular_minutes(int a, int b) {
  int d = std::abs(a - b) % 1440;
  return std::min(d, 1440 - d);
}

}  // namespace progslu
