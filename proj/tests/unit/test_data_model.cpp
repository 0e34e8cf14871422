#include <doctest.h>

#include <cmath>

#include "itedist/data_model.hpp"
#include "itedist/error.hpp"

using namespace itedist;

namespace {

Sample two_cells() {
  // cell 0: rows 0-5, cell 1: rows 6-11
  return Sample({1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12}, {1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0},
                {1, 1, 1, 0, 0, 0, 1, 1, 1, 0, 0, 0}, {0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1}, {"x"});
}

}  // namespace

TEST_CASE("sample rejects malformed rows") {
  CHECK_THROWS_AS(Sample::without_covariates({1.0}, {2}, {0}), std::invalid_argument);
  CHECK_THROWS_AS(Sample::without_covariates({1.0}, {1}, {-1}), std::invalid_argument);
  CHECK_THROWS_AS(Sample::without_covariates({NAN}, {1}, {0}), std::invalid_argument);
  CHECK_THROWS_AS(Sample({1.0, 2.0}, {1, 0}, {0, 1}, {3}, {"x"}), std::invalid_argument);
}

TEST_CASE("cells index rows in order") {
  const Sample s = two_cells();
  REQUIRE(s.cells().size() == 2);
  CHECK(s.cells().at({0}) == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
  CHECK(s.cells().at({1}).front() == 6);

  const std::vector<std::size_t> rows = {11, 0, 0};
  const Sample t = s.take(rows);
  CHECK(t.size() == 3);
  CHECK(t.y(0) == 12.0);
  CHECK(t.y(2) == 1.0);
  CHECK(t.cells().at({0}) == std::vector<std::size_t>{1, 2});

  const Sample a = s.with_affine_outcome(2.0, 3.0);
  CHECK(a.y(4) == 13.0);
  CHECK(a.cells() == s.cells());
}

TEST_CASE("bounds per treatment and cell") {
  const Sample s = two_cells();
  const Bounds b = estimate_bounds(s);
  CHECK(b.at(1, {0}).lower == 1.0);
  CHECK(b.at(1, {0}).upper == 5.0);
  CHECK(b.at(0, {1}).lower == 8.0);
  CHECK(b.at(0, {1}).upper == 12.0);
  CHECK_THROWS_AS(b.at(0, {7}), EstimabilityError);

  const Sample one = Sample::without_covariates({7.0, 7.0}, {1, 1}, {0, 1});
  CHECK_THROWS_AS(estimate_bounds(one), EstimabilityError);
}

TEST_CASE("estimability flags and blocking reasons") {
  const Sample s = two_cells();
  const auto report = check_estimability(s, 10);
  REQUIRE(report.cells.size() == 2);
  CHECK(report.estimable());
  CHECK(report.has_flags());
  CHECK(report.cells[0].n_z0 == 3);
  CHECK(report.cells[0].n_z1 == 3);
  CHECK(report.cells[0].first_stage == doctest::Approx(2.0 / 3.0 - 1.0 / 3.0));
  CHECK_NOTHROW(require_estimable(s));

  // A z-margin of one row is emptied by its own removal.
  const Sample thin = Sample::without_covariates({1, 2, 3, 4}, {1, 0, 1, 0}, {1, 1, 1, 0});
  CHECK_FALSE(is_estimable(thin));
  CHECK_THROWS_AS(require_estimable(thin), EstimabilityError);

  // n = 2 in a cell cannot work.
  const Sample pair = Sample::without_covariates({1, 2}, {1, 0}, {1, 0});
  CHECK_THROWS_AS(require_estimable(pair), EstimabilityError);

  const Sample untreated = Sample::without_covariates({1, 2, 3, 4}, {0, 0, 0, 0}, {1, 1, 0, 0});
  CHECK(check_estimability(untreated).cells[0].blocking);
}

TEST_CASE("csv ingestion") {
  const std::string text =
      "\xEF\xBB\xBFy,d,z,region,size\n"
      "1.5,1,1,\"north\",2\n"
      "\n"
      "2.5,0,0,south,3\n"
      " 3.5 ,1,0,\"north\",2\n";
  ColumnMap cols;
  cols.covariates = {"region", "size"};
  const IngestResult r = ingest_csv_text(text, cols);
  REQUIRE(r.sample.size() == 3);
  CHECK(r.sample.y(2) == 3.5);
  CHECK(r.sample.key(0) == CovariateKey{0, 2});
  CHECK(r.sample.key(1) == CovariateKey{1, 3});
  CHECK(r.labels.at("region").at("south") == 1);
  CHECK_FALSE(r.labels.contains("size"));

  SUBCASE("custom column names") {
    ColumnMap c;
    c.outcome = "net_tfa";
    c.treatment = "p401";
    c.instrument = "e401";
    const auto s = ingest_csv_text("net_tfa,p401,e401\n1,1,1\n2,0,0\n", c).sample;
    CHECK(s.size() == 2);
  }
  SUBCASE("missing column") {
    ColumnMap c;
    c.instrument = "iv";
    try {
      ingest_csv_text("y,d,z\n1,1,1\n", c);
      FAIL("expected an ingest error");
    } catch (const IngestError& e) {
      CHECK(e.column() == "iv");
    }
  }
  SUBCASE("non-binary treatment names row and column") {
    try {
      ingest_csv_text("y,d,z\n1,1,1\n2,2,0\n", ColumnMap{});
      FAIL("expected an ingest error");
    } catch (const IngestError& e) {
      CHECK(e.row() == 2);
      CHECK(e.column() == "d");
    }
  }
  SUBCASE("other row errors") {
    CHECK_THROWS_AS(ingest_csv_text("y,d,z\n1,1\n", ColumnMap{}), IngestError);
    CHECK_THROWS_AS(ingest_csv_text("y,d,z\nabc,1,0\n", ColumnMap{}), IngestError);
    CHECK_THROWS_AS(ingest_csv_text("y,d,z\n,1,0\n", ColumnMap{}), IngestError);
    ColumnMap c;
    c.covariates = {"age"};
    CHECK_THROWS_AS(ingest_csv_text("y,d,z,age\n1,1,0,30.5\n", c), IngestError);
  }
}

TEST_CASE("group selectors") {
  const std::vector<std::string> names = {"region", "size"};
  const LabelDictionary labels = {{"region", {{"north", 0}, {"south", 1}}}};

  const auto all = GroupSelector::parse("all", names, labels);
  CHECK(all.selects_all());
  CHECK(GroupSelector::parse("", names, labels).selects_all());

  const auto sel = GroupSelector::parse("region=south, size>=3", names, labels);
  const std::int64_t hit[] = {1, 3};
  const std::int64_t miss[] = {1, 2};
  CHECK(sel.matches(hit));
  CHECK_FALSE(sel.matches(miss));

  const auto ne = GroupSelector::parse("size!=2", names, labels);
  CHECK(ne.matches(hit));
  CHECK_FALSE(ne.matches(miss));

  CHECK_THROWS_AS(GroupSelector::parse("height=2", names, labels), ConfigError);
  CHECK_THROWS_AS(GroupSelector::parse("region>north", names, labels), ConfigError);
  CHECK_THROWS_AS(GroupSelector::parse("size=big", names, labels), ConfigError);
  CHECK_THROWS_AS(GroupSelector::parse("size", names, labels), ConfigError);

  const Sample s = two_cells();
  const auto lo = GroupSelector::parse("x=0", {"x"});
  const auto hi = GroupSelector::parse("x>0", {"x"});
  const Sample picked = select_group(s, hi);
  CHECK(picked.size() == 6);
  CHECK(picked.y(0) == 7.0);
  CHECK_FALSE(selectors_overlap(s, lo, hi));
  CHECK(selectors_overlap(s, lo, lo));
  CHECK_THROWS_AS(select_group(s, GroupSelector::parse("x>5", {"x"})), ConfigError);
}
