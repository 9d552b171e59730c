#include <doctest.h>

#include <fstream>
#include <functional>

#include "diffsub/data.hpp"
#include "diffsub/error.hpp"
#include "helpers.hpp"

using namespace diffsub;

namespace {

std::vector<ColumnSchema> basic_schema() {
  return {{"x", ColumnKind::Numeric, {}},
          {"a", ColumnKind::Attribute, {}},
          {"y", ColumnKind::TargetContinuous, {}}};
}

Dataset three_rows(Scaling s) {
  DatasetInput in;
  in.features.push_back({"x", false, {10.0, 30.0, 20.0}, {}, {}});
  in.attribute = {0, 1, 0};
  in.target = {1.0, 2.0, 3.0};
  in.scaling = s;
  return Dataset::build(std::move(in));
}

std::string write(const std::filesystem::path& dir, const std::string& text) {
  auto p = dir / "data.csv";
  std::ofstream(p) << text;
  return p.string();
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::Internal;
}

}  // namespace

TEST_CASE("min-max scaling maps the midpoint to 0.5") {
  auto ds = three_rows(Scaling::MinMax);
  CHECK(ds.feature(2, 0) == doctest::Approx(0.5));
  CHECK(ds.feature(0, 0) == 0.0);
  CHECK(ds.feature(1, 0) == 1.0);
}

TEST_CASE("decoded interval reads in original units") {
  auto ds = three_rows(Scaling::MinMax);
  auto c = decode_interval(ds, 0, 0.25, 0.75);
  CHECK(c.text == "x ∈ (15, 25)");
  CHECK_FALSE(c.vacuous);
  CHECK(decode_interval(ds, 0, -0.1, 1.1).vacuous);
}

TEST_CASE("standardized features round-trip to original values") {
  auto ds = three_rows(Scaling::Standardize);
  double mean = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < 3; ++i) mean += ds.feature(i, 0) / 3.0;
  for (std::size_t i = 0; i < 3; ++i) sq += ds.feature(i, 0) * ds.feature(i, 0) / 3.0;
  CHECK(mean == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(sq == doctest::Approx(1.0));
  for (double v : {10.0, 17.5, 30.0}) CHECK(ds.to_original(0, ds.to_encoded(0, v)) == doctest::Approx(v));
}

TEST_CASE("csv parsing handles quotes and categorical one-hot") {
  auto dir = testing::temp_dir("csv");
  auto path = write(dir,
                    "x,color,a,y\n"
                    "1,\"red\",0,0.5\n"
                    "2,\"blue, dark\",1,1.5\n"
                    "3,red,1,2.5\n"
                    "4,\"say \"\"hi\"\"\",0,3.5\n");
  std::vector<ColumnSchema> schema = {{"x", ColumnKind::Numeric, {}},
                                      {"color", ColumnKind::Categorical, {}},
                                      {"a", ColumnKind::Attribute, {}},
                                      {"y", ColumnKind::TargetContinuous, {}}};
  auto ds = load_csv(path, schema, {Scaling::None});
  REQUIRE(ds.rows() == 4);
  REQUIRE(ds.dims() == 4);
  auto names = ds.feature_names();
  CHECK(names[1] == "color=blue, dark");
  CHECK(names[2] == "color=red");
  CHECK(names[3] == "color=say \"hi\"");
  CHECK(ds.feature(0, 2) == 1.0);
  CHECK(ds.feature(1, 1) == 1.0);
  CHECK(ds.feature(1, 2) == 0.0);
  CHECK(ds.n0() == 2);
  CHECK(ds.n1() == 2);
}

TEST_CASE("schema validation rejects malformed schemas") {
  auto schema = basic_schema();
  schema.push_back({"a", ColumnKind::Numeric, {}});
  CHECK(kind_of([&] { validate_schema(schema); }) == ErrorKind::SchemaMismatch);
  std::vector<ColumnSchema> no_target = {{"x", ColumnKind::Numeric, {}}, {"a", ColumnKind::Attribute, {}}};
  CHECK(kind_of([&] { validate_schema(no_target); }) == ErrorKind::SchemaMismatch);
  CHECK(kind_of([] { parse_column_kind("ordinal"); }) == ErrorKind::SchemaMismatch);
}

TEST_CASE("csv errors carry their kind") {
  auto dir = testing::temp_dir("csv_errors");
  CHECK(kind_of([&] { load_csv((dir / "absent.csv").string(), basic_schema()); }) == ErrorKind::NotFound);
  auto bad_attr = write(dir, "x,a,y\n1,2,0.5\n2,0,1\n");
  CHECK(kind_of([&] { load_csv(bad_attr, basic_schema()); }) == ErrorKind::ParseError);
  auto missing_col = write(dir, "x,y\n1,0.5\n");
  CHECK(kind_of([&] { load_csv(missing_col, basic_schema()); }) == ErrorKind::SchemaMismatch);
  auto one_group = write(dir, "x,a,y\n1,0,0.5\n2,0,1\n");
  CHECK(kind_of([&] { load_csv(one_group, basic_schema()); }) == ErrorKind::EmptyGroup);
}

TEST_CASE("write_csv and load_csv reproduce the input exactly") {
  auto ds0 = testing::random_dataset(40, 3, 5);
  DatasetInput in;
  for (std::size_t j = 0; j < 3; ++j) {
    InputColumn c{"x" + std::to_string(j), false, {}, {}, {}};
    for (std::size_t i = 0; i < 40; ++i) c.values.push_back(ds0.feature(i, j));
    in.features.push_back(c);
  }
  in.attribute = ds0.attribute();
  in.target = ds0.target();
  auto dir = testing::temp_dir("roundtrip");
  write_csv((dir / "d.csv").string(), in);
  auto ds1 = load_csv((dir / "d.csv").string(), schema_for(in), {Scaling::None});
  CHECK(ds1.features() == ds0.features());
  CHECK(ds1.target() == ds0.target());
  CHECK(ds1.attribute() == ds0.attribute());
}

TEST_CASE("subset keeps scaling and row ids") {
  auto ds = testing::random_dataset(20, 2, 1, Scaling::MinMax);
  std::vector<std::size_t> keep = {3, 4, 7, 10};
  auto sub = ds.subset(keep);
  CHECK(sub.rows() == 4);
  CHECK(sub.row_ids() == keep);
  CHECK(sub.feature(2, 1) == ds.feature(7, 1));
  CHECK(sub.to_original(0, 0.5) == ds.to_original(0, 0.5));
}
