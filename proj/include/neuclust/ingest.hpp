#pragma once

// MovieLens-style ratings/movies dumps to environment inputs.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "neuclust/linalg.hpp"

namespace neuclust::ingest {

using linalg::DenseMatrix;

inline constexpr std::size_t kGenreCount = 20;
/// 2015-01-01T00:00:00Z.
inline constexpr std::int64_t kDefaultMinEpoch = 1420070400;
inline constexpr std::size_t kDefaultMinRatings = 200;

/// The fixed MovieLens genre list; "(no genres listed)" is the last entry.
const std::array<std::string_view, kGenreCount>& genre_names();
std::optional<std::size_t> genre_index(std::string_view name);
inline constexpr std::size_t kNoGenresIndex = kGenreCount - 1;

struct ParseReport {
  std::size_t data_rows = 0;
  std::size_t malformed = 0;
  /// First few malformed rows as "line N: reason".
  std::vector<std::string> samples;
};

struct Rating {
  std::int64_t user = 0;
  std::int64_t movie = 0;
  double rating = 0.0;
  std::int64_t timestamp = 0;
};

struct RatingsTable {
  std::vector<Rating> rows;
  ParseReport report;
  /// Well-formed rows skipped at parse time by the early timestamp cut.
  std::size_t skipped_before_epoch = 0;
  /// Distinct users over all well-formed rows, skipped ones included.
  std::size_t users_seen = 0;
};

using GenreVector = std::array<std::uint8_t, kGenreCount>;

struct GenreCatalog {
  std::map<std::int64_t, GenreVector> movies;
  ParseReport report;
};

/// Splits one CSV record; double quotes protect commas and "" escapes a quote.
/// Throws ParseError on an unterminated quote.
std::vector<std::string> split_csv_line(std::string_view line);

/// Parses "userId,movieId,rating,timestamp". Rows with timestamp below
/// `skip_before` are validated and counted but not stored, which keeps the
/// full dump out of memory. Throws IoError / ParseError (bad header, more
/// than 1% malformed rows).
RatingsTable parse_ratings(const std::filesystem::path& path,
                           std::int64_t skip_before = std::numeric_limits<std::int64_t>::min());
/// Parses "movieId,title,genres" with pipe-separated genres.
GenreCatalog parse_movies(const std::filesystem::path& path);

struct BuildStats {
  std::size_t ratings_in = 0;
  std::size_t ratings_before_epoch = 0;
  std::size_t ratings_unknown_movie = 0;
  std::size_t ratings_no_genre = 0;
  std::size_t ratings_kept = 0;
  std::size_t users_in = 0;
  std::size_t users_kept = 0;
  std::size_t movies_kept = 0;
};

/// No user survived the filters; carries the counts that explain why.
class EmptyResult : public std::runtime_error {
 public:
  EmptyResult(const std::string& what, BuildStats stats)
      : std::runtime_error(what), stats_(stats) {}
  const BuildStats& stats() const noexcept { return stats_; }

 private:
  BuildStats stats_;
};

struct EnvInputs {
  std::vector<std::int64_t> user_ids;  // ascending
  DenseMatrix contexts;                // users x 20 genre means
  DenseMatrix counts;                  // users x 20 rating counts
  std::vector<std::int64_t> movie_ids; // ascending
  DenseMatrix items;                   // movies x 20 binary
};

struct BuildResult {
  EnvInputs inputs;
  BuildStats stats;
};

/// Applies the timestamp cut, drops movies without genres, keeps users with at
/// least `min_ratings` (and at least one) remaining ratings and averages
/// their ratings per genre.
/// Throws EmptyResult when no user survives.
BuildResult filter_and_build(const RatingsTable& ratings, const GenreCatalog& catalog,
                             std::size_t min_ratings = kDefaultMinRatings,
                             std::int64_t min_timestamp = kDefaultMinEpoch);

/// Writes contexts.csv, counts.csv, items.csv and, when given, stats.txt.
void export_env_inputs(const EnvInputs& inputs, const std::filesystem::path& dir,
                       const BuildStats* stats = nullptr);
/// Reads what export_env_inputs wrote; counts.csv is optional (all ones).
EnvInputs read_env_inputs(const std::filesystem::path& dir);

std::string format_stats(const BuildStats& stats);

}  // namespace neuclust::ingest
