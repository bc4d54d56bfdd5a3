#include "neuclust/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "neuclust/error.hpp"
#include "neuclust/textio.hpp"

namespace neuclust::ingest {

namespace {

constexpr std::size_t kMaxSamples = 10;

constexpr std::array<std::string_view, kGenreCount> kGenres = {
    "Action",  "Adventure", "Animation", "Children", "Comedy",  "Crime",   "Documentary",
    "Drama",   "Fantasy",   "Film-Noir", "Horror",   "IMAX",    "Musical", "Mystery",
    "Romance", "Sci-Fi",    "Thriller",  "War",      "Western", "(no genres listed)"};

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

void note_malformed(ParseReport& r, std::size_t line_no, const std::string& why) {
  ++r.malformed;
  if (r.samples.size() < kMaxSamples) r.samples.push_back("line " + std::to_string(line_no) + ": " + why);
}

void check_malformed_share(const ParseReport& r, const std::filesystem::path& path) {
  // More than 1% bad rows means the file is not the expected layout.
  if (r.malformed * 100 > r.data_rows) {
    std::string msg = path.string() + ": " + std::to_string(r.malformed) + " of " +
                      std::to_string(r.data_rows) + " rows malformed";
    for (const auto& s : r.samples) msg += "\n  " + s;
    throw ParseError(msg);
  }
}

std::ifstream open_with_header(const std::filesystem::path& path, std::string_view expected) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string header;
  if (!std::getline(in, header)) throw ParseError(path.string() + ": missing header");
  strip_cr(header);
  if (!header.empty() && header.rfind("\xEF\xBB\xBF", 0) == 0) header.erase(0, 3);
  if (header != expected)
    throw ParseError(path.string() + ": expected header '" + std::string(expected) + "', got '" +
                     header + "'");
  return in;
}

std::string header_line(std::string_view id_column) {
  std::string h(id_column);
  for (auto g : kGenres) {
    h += ',';
    h += g;
  }
  h += '\n';
  return h;
}

}  // namespace

const std::array<std::string_view, kGenreCount>& genre_names() { return kGenres; }

std::optional<std::size_t> genre_index(std::string_view name) {
  for (std::size_t i = 0; i < kGenres.size(); ++i)
    if (kGenres[i] == name) return i;
  return std::nullopt;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ParseError("unterminated quote");
  out.push_back(std::move(cur));
  return out;
}

RatingsTable parse_ratings(const std::filesystem::path& path, std::int64_t skip_before) {
  auto in = open_with_header(path, "userId,movieId,rating,timestamp");
  RatingsTable table;
  std::unordered_set<std::int64_t> users;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    ++table.report.data_rows;
    Rating r;
    try {
      const auto f = split_csv_line(line);
      if (f.size() != 4) throw ParseError("expected 4 fields, got " + std::to_string(f.size()));
      r.user = textio::parse_int(f[0], "userId");
      r.movie = textio::parse_int(f[1], "movieId");
      r.rating = textio::parse_double(f[2], "rating");
      r.timestamp = textio::parse_int(f[3], "timestamp");
      if (r.user < 0 || r.movie < 0) throw ParseError("negative id");
      if (!(r.rating >= 0.5 && r.rating <= 5.0) || std::floor(r.rating * 2.0) != r.rating * 2.0)
        throw ParseError("rating " + f[2] + " not in {0.5, 1.0, ..., 5.0}");
    } catch (const ParseError& e) {
      note_malformed(table.report, line_no, e.what());
      continue;
    }
    users.insert(r.user);
    if (r.timestamp < skip_before) {
      ++table.skipped_before_epoch;
      continue;
    }
    table.rows.push_back(r);
  }
  check_malformed_share(table.report, path);
  table.users_seen = users.size();
  return table;
}

GenreCatalog parse_movies(const std::filesystem::path& path) {
  auto in = open_with_header(path, "movieId,title,genres");
  GenreCatalog cat;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    ++cat.report.data_rows;
    try {
      const auto f = split_csv_line(line);
      if (f.size() != 3) throw ParseError("expected 3 fields, got " + std::to_string(f.size()));
      const auto id = textio::parse_int(f[0], "movieId");
      if (id < 0) throw ParseError("negative id");
      GenreVector bits{};
      std::string_view rest = f[2];
      while (true) {
        const auto bar = rest.find('|');
        const auto name = rest.substr(0, bar);
        const auto idx = genre_index(name);
        if (!idx) throw ParseError("unknown genre '" + std::string(name) + "'");
        bits[*idx] = 1;
        if (bar == std::string_view::npos) break;
        rest.remove_prefix(bar + 1);
      }
      if (!cat.movies.emplace(id, bits).second) throw ParseError("duplicate movieId " + f[0]);
    } catch (const ParseError& e) {
      note_malformed(cat.report, line_no, e.what());
    }
  }
  check_malformed_share(cat.report, path);
  return cat;
}

BuildResult filter_and_build(const RatingsTable& ratings, const GenreCatalog& catalog,
                             std::size_t min_ratings, std::int64_t min_timestamp) {
  BuildStats st;
  st.ratings_in = ratings.rows.size() + ratings.skipped_before_epoch;
  st.ratings_before_epoch = ratings.skipped_before_epoch;
  st.users_in = ratings.users_seen;
  if (st.users_in == 0) {
    std::unordered_set<std::int64_t> u;
    for (const auto& r : ratings.rows) u.insert(r.user);
    st.users_in = u.size();
  }

  auto has_evidence = [](const GenreVector& g) {
    for (std::size_t j = 0; j < kGenreCount; ++j)
      if (j != kNoGenresIndex && g[j]) return true;
    return false;
  };

  // Pass 1: surviving rating count per user.
  std::unordered_map<std::int64_t, std::size_t> per_user;
  std::vector<const GenreVector*> genre_of(ratings.rows.size(), nullptr);
  for (std::size_t k = 0; k < ratings.rows.size(); ++k) {
    const auto& r = ratings.rows[k];
    if (r.timestamp < min_timestamp) {
      ++st.ratings_before_epoch;
      continue;
    }
    const auto it = catalog.movies.find(r.movie);
    if (it == catalog.movies.end()) {
      ++st.ratings_unknown_movie;
      continue;
    }
    if (!has_evidence(it->second)) {
      ++st.ratings_no_genre;
      continue;
    }
    genre_of[k] = &it->second;
    ++per_user[r.user];
  }

  const std::size_t need = std::max<std::size_t>(min_ratings, 1);
  std::map<std::int64_t, std::size_t> row_of;
  {
    std::vector<std::int64_t> kept;
    for (const auto& [u, n] : per_user)
      if (n >= need) kept.push_back(u);
    std::sort(kept.begin(), kept.end());
    for (std::size_t i = 0; i < kept.size(); ++i) row_of.emplace(kept[i], i);
  }
  st.users_kept = row_of.size();
  if (row_of.empty()) throw EmptyResult("ingest: no user has " + std::to_string(need) + " qualifying ratings", st);

  // Pass 2: per-genre sums. Ratings are multiples of 0.5, so the sums are
  // exact and independent of row order.
  BuildResult out;
  auto& in = out.inputs;
  const std::size_t n = row_of.size();
  DenseMatrix sums(n, kGenreCount);
  in.counts = DenseMatrix(n, kGenreCount);
  std::set<std::int64_t> movies;
  for (std::size_t k = 0; k < ratings.rows.size(); ++k) {
    if (genre_of[k] == nullptr) continue;
    const auto& r = ratings.rows[k];
    const auto it = row_of.find(r.user);
    if (it == row_of.end()) continue;
    ++st.ratings_kept;
    movies.insert(r.movie);
    const auto& g = *genre_of[k];
    for (std::size_t j = 0; j < kGenreCount; ++j) {
      if (!g[j]) continue;
      sums(it->second, j) += r.rating;
      in.counts(it->second, j) += 1.0;
    }
  }

  in.user_ids.reserve(n);
  for (const auto& [u, i] : row_of) in.user_ids.push_back(u);
  in.contexts = DenseMatrix(n, kGenreCount);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < kGenreCount; ++j)
      if (in.counts(i, j) > 0.0) in.contexts(i, j) = sums(i, j) / in.counts(i, j);

  in.movie_ids.assign(movies.begin(), movies.end());
  in.items = DenseMatrix(in.movie_ids.size(), kGenreCount);
  for (std::size_t z = 0; z < in.movie_ids.size(); ++z) {
    const auto& g = catalog.movies.at(in.movie_ids[z]);
    for (std::size_t j = 0; j < kGenreCount; ++j) in.items(z, j) = g[j] ? 1.0 : 0.0;
  }
  st.movies_kept = in.movie_ids.size();
  out.stats = st;
  return out;
}

std::string format_stats(const BuildStats& s) {
  std::ostringstream o;
  o << "ratings_in=" << s.ratings_in << '\n'
    << "ratings_before_epoch=" << s.ratings_before_epoch << '\n'
    << "ratings_unknown_movie=" << s.ratings_unknown_movie << '\n'
    << "ratings_no_genre=" << s.ratings_no_genre << '\n'
    << "ratings_kept=" << s.ratings_kept << '\n'
    << "users_in=" << s.users_in << '\n'
    << "users_kept=" << s.users_kept << '\n'
    << "movies_kept=" << s.movies_kept << '\n';
  return o.str();
}

void export_env_inputs(const EnvInputs& in, const std::filesystem::path& dir, const BuildStats* stats) {
  if (in.contexts.rows() != in.user_ids.size() || in.items.rows() != in.movie_ids.size())
    throw InvalidArgument("export_env_inputs: id lists do not match table rows");
  const bool has_counts = in.counts.rows() == in.contexts.rows() && in.counts.cols() == kGenreCount;
  std::string ctx = header_line("user_id");
  std::string cnt = header_line("user_id");
  for (std::size_t i = 0; i < in.user_ids.size(); ++i) {
    ctx += std::to_string(in.user_ids[i]);
    cnt += std::to_string(in.user_ids[i]);
    for (std::size_t j = 0; j < kGenreCount; ++j) {
      ctx += ',' + textio::fmt9(in.contexts(i, j));
      cnt += ',' + (has_counts ? textio::fmt9(in.counts(i, j)) : std::string("1"));
    }
    ctx += '\n';
    cnt += '\n';
  }
  std::string items = header_line("movie_id");
  for (std::size_t z = 0; z < in.movie_ids.size(); ++z) {
    items += std::to_string(in.movie_ids[z]);
    for (std::size_t j = 0; j < kGenreCount; ++j) items += in.items(z, j) != 0.0 ? ",1" : ",0";
    items += '\n';
  }
  textio::write_file(dir / "contexts.csv", ctx);
  textio::write_file(dir / "counts.csv", cnt);
  textio::write_file(dir / "items.csv", items);
  if (stats != nullptr) textio::write_file(dir / "stats.txt", format_stats(*stats));
}

namespace {

void read_table(const std::filesystem::path& path, std::string_view id_column,
                std::vector<std::int64_t>& ids, DenseMatrix& values) {
  std::istringstream in(textio::read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": missing header");
  strip_cr(line);
  std::string expected = header_line(id_column);
  expected.pop_back();
  if (line != expected) throw ParseError(path.string() + ": unexpected header");
  ids.clear();
  values = DenseMatrix(0, kGenreCount);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    const std::string where = path.string() + " line " + std::to_string(line_no);
    if (f.size() != kGenreCount + 1) throw ParseError(where + ": expected 21 fields");
    ids.push_back(textio::parse_int(f[0], where));
    std::vector<double> row(kGenreCount);
    for (std::size_t j = 0; j < kGenreCount; ++j) row[j] = textio::parse_double(f[j + 1], where);
    values.append_row(row);
  }
}

}  // namespace

EnvInputs read_env_inputs(const std::filesystem::path& dir) {
  EnvInputs in;
  read_table(dir / "contexts.csv", "user_id", in.user_ids, in.contexts);
  read_table(dir / "items.csv", "movie_id", in.movie_ids, in.items);
  if (std::filesystem::exists(dir / "counts.csv")) {
    std::vector<std::int64_t> ids;
    read_table(dir / "counts.csv", "user_id", ids, in.counts);
    if (ids != in.user_ids) throw ParseError((dir / "counts.csv").string() + ": user ids differ from contexts.csv");
  } else {
    in.counts = DenseMatrix(in.contexts.rows(), kGenreCount, 1.0);
  }
  return in;
}

}  // namespace neuclust::ingest
