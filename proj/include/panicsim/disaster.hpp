#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace panicsim {

struct TrackPoint {
  std::int64_t timestamp = 0;  // UTC seconds
  double latitude = 0;
  double longitude = 0;
  double max_wind_kmh = 0;
  double pressure_hpa = 0;
  std::string category;
};

/// Physical-domain time series rendered into the disaster-perception prompt.
struct DisasterContext {
  std::string event_name;
  std::optional<std::int64_t> landfall_time;
  std::vector<TrackPoint> rows;  // ascending by timestamp

  /// Throws DataError unless rows are time-sorted with positive wind.
  void validate() const;
};

/// CSV with header timestamp,latitude,longitude,max_wind_kmh,pressure_hpa,category.
/// Timestamps are epoch seconds or "YYYY-MM-DDTHH:MM[:SS]Z". Leading
/// "# event: <name>" and "# landfall: <time>" comment lines set the metadata.
DisasterContext parse_disaster_csv(std::istream& in);
DisasterContext load_disaster_csv(const std::filesystem::path& path);

/// Markdown table, one row per track point.
std::string render_disaster_table(const DisasterContext& context);

std::int64_t parse_utc_time(const std::string& text);
std::string format_utc_time(std::int64_t timestamp);

inline constexpr double kEarthRadiusKm = 6371.0088;

double haversine_km(double lat1, double lon1, double lat2, double lon2);

/// Distance to the closest track point; nullopt for an empty track.
std::optional<double> nearest_track_distance_km(const DisasterContext& context, double latitude,
                                                double longitude);

}  // namespace panicsim
