#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "neuclust/error.hpp"
#include "neuclust/ingest.hpp"
#include "neuclust/textio.hpp"

using namespace neuclust;
using namespace neuclust::ingest;

namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = NEUCLUST_FIXTURES;

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("neuclust_ingest_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

double ctx(const EnvInputs& in, std::int64_t user, std::string_view genre) {
  const auto row = std::find(in.user_ids.begin(), in.user_ids.end(), user) - in.user_ids.begin();
  return in.contexts(static_cast<std::size_t>(row), *genre_index(genre));
}

}  // namespace

TEST_CASE("genre list") {
  CHECK(genre_names().size() == 20);
  CHECK(genre_index("Action") == 0);
  CHECK(genre_index("Sci-Fi").has_value());
  CHECK(genre_index("(no genres listed)") == kNoGenresIndex);
  CHECK_FALSE(genre_index("Space Opera").has_value());
}

TEST_CASE("split_csv_line") {
  CHECK(split_csv_line("a,b,,c") == std::vector<std::string>{"a", "b", "", "c"});
  CHECK(split_csv_line("2,\"Heat, The (1995)\",Action") ==
        std::vector<std::string>{"2", "Heat, The (1995)", "Action"});
  CHECK(split_csv_line("1,\"say \"\"hi\"\"\",x") == std::vector<std::string>{"1", "say \"hi\"", "x"});
  CHECK_THROWS_AS(split_csv_line("1,\"open"), ParseError);
}

TEST_CASE("parse_ratings") {
  const auto t = parse_ratings(kFixtures / "ratings.csv");
  REQUIRE(t.rows.size() == 9);
  CHECK(t.rows[0].user == 1);
  CHECK(t.rows[0].movie == 1);
  CHECK(t.rows[0].rating == 4.0);
  CHECK(t.rows[0].timestamp == 1500000000);
  CHECK(t.report.malformed == 0);
  CHECK(t.users_seen == 3);

  const auto early = parse_ratings(kFixtures / "ratings.csv", kDefaultMinEpoch);
  CHECK(early.rows.size() == 8);
  CHECK(early.skipped_before_epoch == 1);

  CHECK(parse_ratings(kFixtures / "ratings_empty.csv").rows.empty());
  CHECK_THROWS_AS(parse_ratings(kFixtures / "ratings_badheader.csv"), ParseError);
  CHECK_THROWS_AS(parse_ratings(kFixtures / "ratings_bad.csv"), ParseError);
  CHECK_THROWS_AS(parse_ratings(kFixtures / "missing.csv"), IoError);

  const auto dir = scratch("tolerance");
  const auto write = [&](int bad) {
    std::ostringstream s;
    s << "userId,movieId,rating,timestamp\n";
    for (int i = 0; i < 200; ++i) s << (i < bad ? "1,x,4.0,0\n" : "1,2,4.5,1500000000\n");
    textio::write_file(dir / "r.csv", s.str());
    return dir / "r.csv";
  };
  const auto ok = parse_ratings(write(2));
  CHECK(ok.rows.size() == 198);
  CHECK(ok.report.malformed == 2);
  CHECK_FALSE(ok.report.samples.empty());
  CHECK_THROWS_AS(parse_ratings(write(3)), ParseError);
  fs::remove_all(dir);
}

TEST_CASE("parse_ratings rejects off-grid ratings") {
  const auto dir = scratch("grid");
  std::ostringstream s;
  s << "userId,movieId,rating,timestamp\n";
  for (int i = 0; i < 300; ++i) s << "1,2,4.5,1500000000\n";
  s << "1,2,4.25,1500000000\n1,2,0.0,1500000000\n1,-3,4.0,1500000000\n";
  textio::write_file(dir / "r.csv", s.str());
  const auto t = parse_ratings(dir / "r.csv");
  CHECK(t.report.malformed == 3);
  CHECK(t.rows.size() == 300);
  fs::remove_all(dir);
}

TEST_CASE("parse_movies") {
  const auto cat = parse_movies(kFixtures / "movies.csv");
  REQUIRE(cat.movies.size() == 5);
  const auto& heat = cat.movies.at(2);
  CHECK(heat[*genre_index("Action")] == 1);
  CHECK(heat[*genre_index("Crime")] == 1);
  CHECK(heat[*genre_index("Thriller")] == 1);
  CHECK(std::count(heat.begin(), heat.end(), 1) == 3);
  const auto& mixed = cat.movies.at(5);
  CHECK(mixed[0] == 1);
  CHECK(mixed[*genre_index("Comedy")] == 1);
  CHECK(std::count(mixed.begin(), mixed.end(), 1) == 2);
  CHECK(cat.movies.at(4)[kNoGenresIndex] == 1);
}

TEST_CASE("filter_and_build on the fixture") {
  const auto cat = parse_movies(kFixtures / "movies.csv");
  const auto t = parse_ratings(kFixtures / "ratings.csv");
  const auto r = filter_and_build(t, cat, 1, kDefaultMinEpoch);
  const auto& in = r.inputs;
  CHECK(in.user_ids == std::vector<std::int64_t>{1, 2, 3});
  CHECK(in.movie_ids == std::vector<std::int64_t>{1, 2, 3, 5});
  CHECK(ctx(in, 1, "Action") == 2.75);
  CHECK(ctx(in, 1, "Comedy") == 3.0);
  CHECK(ctx(in, 1, "Crime") == 3.5);
  CHECK(ctx(in, 1, "Documentary") == 0.0);
  CHECK(ctx(in, 2, "Action") == 4.5);
  CHECK(ctx(in, 2, "Crime") == 5.0);
  CHECK(ctx(in, 2, "Comedy") == 4.0);
  CHECK(ctx(in, 2, "Documentary") == 0.0);
  CHECK(ctx(in, 3, "Documentary") == 4.5);
  CHECK(ctx(in, 3, "Fantasy") == 0.5);
  CHECK(in.counts(0, 0) == 2.0);
  for (double v : in.contexts.data()) {
    CHECK(v >= 0.0);
    CHECK(v <= 5.0);
  }
  CHECK(r.stats.ratings_in == 9);
  CHECK(r.stats.ratings_before_epoch == 1);
  CHECK(r.stats.ratings_no_genre == 1);
  CHECK(r.stats.ratings_kept == 7);
  CHECK(r.stats.users_kept == 3);
  CHECK(r.stats.movies_kept == 4);

  // every genre column of an item row comes from the catalog
  for (std::size_t k = 0; k < in.movie_ids.size(); ++k)
    for (std::size_t j = 0; j < kGenreCount; ++j)
      CHECK(in.items(k, j) == cat.movies.at(in.movie_ids[k])[j]);

  const auto all = filter_and_build(t, cat, 0, 0);
  CHECK(all.inputs.user_ids.size() == 3);
  CHECK(ctx(all.inputs, 2, "Documentary") == doctest::Approx(1.0));

  CHECK(filter_and_build(t, cat, 3, kDefaultMinEpoch).inputs.user_ids == std::vector<std::int64_t>{1});
  try {
    filter_and_build(t, cat, 50, kDefaultMinEpoch);
    FAIL("expected EmptyResult");
  } catch (const EmptyResult& e) {
    CHECK(e.stats().users_kept == 0);
    CHECK(e.stats().ratings_in == 9);
  }
}

TEST_CASE("spec example: two action movies") {
  GenreCatalog cat;
  GenreVector action{}, action_comedy{};
  action[0] = 1;
  action_comedy[0] = 1;
  action_comedy[*genre_index("Comedy")] = 1;
  cat.movies = {{10, action}, {11, action_comedy}};
  RatingsTable t;
  t.rows = {{7, 10, 4.0, 1500000000}, {7, 11, 2.0, 1500000000}};
  const auto r = filter_and_build(t, cat, 0, 0);
  CHECK(r.inputs.contexts(0, 0) == 3.0);
  CHECK(r.inputs.contexts(0, *genre_index("Comedy")) == 2.0);
  double rest = 0;
  for (double v : r.inputs.contexts.data()) rest += v;
  CHECK(rest == 5.0);

  RatingsTable old;
  old.rows = {{7, 10, 4.0, 1000}, {8, 10, 3.0, kDefaultMinEpoch}};
  CHECK(filter_and_build(old, cat, 1).inputs.user_ids == std::vector<std::int64_t>{8});
}

TEST_CASE("filtering ignores row order") {
  const auto cat = parse_movies(kFixtures / "movies.csv");
  auto t = parse_ratings(kFixtures / "ratings.csv");
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> user(1, 40), movie(1, 5), half(1, 10);
  for (int i = 0; i < 2000; ++i)
    t.rows.push_back({user(rng), movie(rng), 0.5 * half(rng), 1420070400 + i});
  const auto base = filter_and_build(t, cat, 5);
  for (int rep = 0; rep < 3; ++rep) {
    std::shuffle(t.rows.begin(), t.rows.end(), rng);
    const auto again = filter_and_build(t, cat, 5);
    CHECK(again.inputs.user_ids == base.inputs.user_ids);
    CHECK(again.inputs.contexts == base.inputs.contexts);
    CHECK(again.inputs.items == base.inputs.items);
  }
}

TEST_CASE("export and read back") {
  const auto cat = parse_movies(kFixtures / "movies.csv");
  const auto t = parse_ratings(kFixtures / "ratings.csv");
  const auto r = filter_and_build(t, cat, 1);
  const auto dir = scratch("export");
  export_env_inputs(r.inputs, dir, &r.stats);
  for (auto f : {"contexts.csv", "counts.csv", "items.csv", "stats.txt"}) {
    CHECK(fs::exists(dir / f));
    CHECK(textio::read_file(dir / f) == textio::read_file(kFixtures / "golden" / f));
  }
  const auto back = read_env_inputs(dir);
  CHECK(back.user_ids == r.inputs.user_ids);
  CHECK(back.contexts == r.inputs.contexts);
  CHECK(back.counts == r.inputs.counts);
  CHECK(back.movie_ids == r.inputs.movie_ids);
  CHECK(back.items == r.inputs.items);

  // 9 significant digits survive a round trip of arbitrary means
  EnvInputs odd = r.inputs;
  odd.contexts(0, 0) = 10.0 / 3.0;
  odd.contexts(1, 2) = 4.123456789;
  export_env_inputs(odd, dir);
  const auto odd_back = read_env_inputs(dir);
  CHECK(odd_back.contexts(0, 0) == doctest::Approx(10.0 / 3.0).epsilon(1e-8));
  CHECK(odd_back.contexts(1, 2) == doctest::Approx(4.123456789).epsilon(1e-8));

  fs::remove(dir / "counts.csv");
  const auto no_counts = read_env_inputs(dir);
  for (double v : no_counts.counts.data()) CHECK(v == 1.0);

  EnvInputs empty;
  empty.contexts = DenseMatrix(0, kGenreCount);
  empty.counts = DenseMatrix(0, kGenreCount);
  empty.items = DenseMatrix(0, kGenreCount);
  const auto edir = scratch("empty");
  export_env_inputs(empty, edir);
  const auto header = textio::read_file(edir / "contexts.csv");
  CHECK(std::count(header.begin(), header.end(), '\n') == 1);
  CHECK(header.rfind("user_id,Action,", 0) == 0);
  fs::remove_all(dir);
  fs::remove_all(edir);
}
