#include "panicsim/disaster.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "panicsim/corpus.hpp"
#include "panicsim/errors.hpp"
#include "panicsim/text.hpp"

namespace panicsim {

void DisasterContext::validate() const {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!(rows[i].max_wind_kmh > 0)) throw DataError("disaster row " + std::to_string(i) + ": wind must be positive");
    if (i > 0 && rows[i].timestamp < rows[i - 1].timestamp)
      throw DataError("disaster rows must be sorted by time");
  }
}

std::int64_t parse_utc_time(const std::string& raw) {
  const std::string text = trim(raw);
  if (!text.empty() && text.find_first_not_of("0123456789") == std::string::npos) {
    return std::stoll(text);
  }
  std::tm tm{};
  int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
  char tail = 0;
  const int n = std::sscanf(text.c_str(), "%d-%d-%dT%d:%d:%d%c", &year, &month, &day, &hour, &minute,
                            &second, &tail);
  if (n < 6) {
    second = 0;
    tail = 0;
    const int m = std::sscanf(text.c_str(), "%d-%d-%dT%d:%d%c", &year, &month, &day, &hour, &minute, &tail);
    if (m < 5) throw DataError("unrecognised UTC time '" + text + "'");
  }
  if (tail != 0 && tail != 'Z') throw DataError("only UTC ('Z') times are accepted: '" + text + "'");
  tm.tm_year = year - 1900;
  tm.tm_mon = month - 1;
  tm.tm_mday = day;
  tm.tm_hour = hour;
  tm.tm_min = minute;
  tm.tm_sec = second;
  return static_cast<std::int64_t>(timegm(&tm));
}

std::string format_utc_time(std::int64_t timestamp) {
  const auto t = static_cast<std::time_t>(timestamp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%d %H:%M", &tm);
  return buf;
}

DisasterContext parse_disaster_csv(std::istream& in) {
  DisasterContext ctx;
  std::string line;
  std::vector<std::string> header;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    if (stripped.front() == '#') {
      const std::string body = trim(stripped.substr(1));
      const auto colon = body.find(':');
      if (colon == std::string::npos) continue;
      const std::string key = to_lower(trim(body.substr(0, colon)));
      const std::string value = trim(body.substr(colon + 1));
      if (key == "event") ctx.event_name = value;
      if (key == "landfall") ctx.landfall_time = parse_utc_time(value);
      continue;
    }
    const auto fields = split_csv_line(stripped);
    if (header.empty()) {
      header = fields;
      continue;
    }
    if (fields.size() != header.size())
      throw DataError("disaster CSV line " + std::to_string(line_no) + ": column count mismatch");
    TrackPoint p;
    for (std::size_t i = 0; i < header.size(); ++i) {
      const std::string& name = header[i];
      const std::string& v = fields[i];
      try {
        if (name == "timestamp") p.timestamp = parse_utc_time(v);
        else if (name == "latitude") p.latitude = std::stod(v);
        else if (name == "longitude") p.longitude = std::stod(v);
        else if (name == "max_wind_kmh") p.max_wind_kmh = std::stod(v);
        else if (name == "pressure_hpa") p.pressure_hpa = std::stod(v);
        else if (name == "category") p.category = trim(v);
      } catch (const std::logic_error&) {
        throw DataError("disaster CSV line " + std::to_string(line_no) + ": bad value for " + name);
      }
    }
    ctx.rows.push_back(std::move(p));
  }
  ctx.validate();
  return ctx;
}

DisasterContext load_disaster_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_disaster_csv(in);
}

namespace {

std::string fixed(double value, int decimals) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(decimals);
  out << value;
  return out.str();
}

}  // namespace

std::string render_disaster_table(const DisasterContext& ctx) {
  if (ctx.rows.empty()) throw DataError("disaster context has no rows");
  std::ostringstream out;
  if (!ctx.event_name.empty()) out << "Event: " << ctx.event_name << "\n";
  if (ctx.landfall_time) out << "Landfall (UTC): " << format_utc_time(*ctx.landfall_time) << "\n";
  out << "| Time (UTC) | Latitude | Longitude | Max Wind (km/h) | Central Pressure (hPa) | Category |\n";
  out << "|---|---|---|---|---|---|\n";
  for (const auto& r : ctx.rows) {
    out << "| " << format_utc_time(r.timestamp) << " | " << fixed(r.latitude, 1) << " | "
        << fixed(r.longitude, 1) << " | " << fixed(r.max_wind_kmh, 0) << " | "
        << fixed(r.pressure_hpa, 0) << " | " << r.category << " |\n";
  }
  return out.str();
}

double haversine_km(double lat1, double lon1, double lat2, double lon2) {
  constexpr double kDeg = std::numbers::pi / 180.0;
  const double dlat = (lat2 - lat1) * kDeg;
  const double dlon = (lon2 - lon1) * kDeg;
  const double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1 * kDeg) * std::cos(lat2 * kDeg) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

std::optional<double> nearest_track_distance_km(const DisasterContext& ctx, double latitude,
                                                double longitude) {
  if (ctx.rows.empty()) return std::nullopt;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : ctx.rows) best = std::min(best, haversine_km(latitude, longitude, r.latitude, r.longitude));
  return best;
}

}  // namespace panicsim
