#include "isomarket/specfile.hpp"

#include <doctest.h>

#include "isomarket/report.hpp"

using namespace isomarket;

namespace {

const char* kFiniteSpec = R"({
  "version": "1",
  "finite_market": {
    "atoms": ["up", "down"],
    "p0": [0.5, 0.5],
    "measures": [[0.25, 0.75]],
    "scale_c": 1.0,
    "payoff": [4.0, 0.0]
  }
})";

const char* kSdeSpec = R"({
  "version": "1",
  "sde": {
    "family": "gbm",
    "rate": 0.02,
    "horizon": 1.0,
    "x0": [100.0],
    "drift": [0.07],
    "vol": [0.2]
  },
  "claims": [
    {"kind": "call", "asset": 0, "strike": 100.0},
    {"kind": "log-q-polynomial", "coefficients": [0.0, 1.0]}
  ],
  "run": {"steps": 64, "paths": 1000, "seed": 7}
})";

}  // namespace

TEST_CASE("finite market specs parse into validated spaces") {
  const auto spec = specfile::parse_spec_json(kFiniteSpec);
  CHECK(spec.kind == specfile::MarketKind::finite);
  CHECK(spec.finite_space.atom_count() == 2);
  CHECK(spec.finite_space.measure_count() == 1);
  REQUIRE(spec.payoff.has_value());
  CHECK(spec.payoff->values[0] == 4.0);
  const auto market = spec.finite_market();
  CHECK(market.scale_c == 1.0);
}

TEST_CASE("sde specs build models, claims and run configuration") {
  const auto spec = specfile::parse_spec_json(kSdeSpec);
  CHECK(spec.kind == specfile::MarketKind::sde);
  CHECK(spec.sde.family == ctsmkt::Family::gbm);
  CHECK(spec.sde.rate == 0.02);
  REQUIRE(spec.claims.size() == 2);
  CHECK(spec.claims[0].kind == ctsmkt::ClaimSpec::Kind::call);
  CHECK(spec.run.steps == 64);
  CHECK(spec.run.paths == 1000);
  CHECK(spec.run.seed == 7);
}

TEST_CASE("strict parsing rejects malformed specs with field paths") {
  CHECK_THROWS_AS(specfile::parse_spec_json("{"), InvalidInput);
  CHECK_THROWS_AS(specfile::parse_spec_json(R"({"finite_market": {"p0": [1.0]}})"),
                  InvalidInput);

  // unknown field
  CHECK_THROWS_AS(specfile::parse_spec_json(R"({
    "version": "1",
    "finite_market": {"p0": [1.0], "bogus": 3}
  })"),
                  InvalidInput);

  // two market blocks
  CHECK_THROWS_AS(specfile::parse_spec_json(R"({
    "version": "1",
    "finite_market": {"p0": [1.0]},
    "gaussian": {"mean": [0], "covariance": [[1]], "cost": [1]}
  })"),
                  InvalidInput);

  // missing p0 mentions the field path
  try {
    specfile::parse_spec_json(R"({"version": "1", "finite_market": {}})");
    CHECK(false);
  } catch (const InvalidInput& e) {
    CHECK(std::string(e.what()).find("finite_market") != std::string::npos);
    CHECK(std::string(e.what()).find("p0") != std::string::npos);
  }

  // bad probability mass
  CHECK_THROWS_AS(specfile::parse_spec_json(R"({
    "version": "1",
    "finite_market": {"p0": [0.5, 0.6]}
  })"),
                  InvalidInput);
}

TEST_CASE("report CSV formatting is stable and round-trippable") {
  CHECK(report::format_float(0.5) == "0.5");
  CHECK(report::format_float(1.0 / 3.0) == "0.33333333333333331");

  report::RunReport run;
  run.command = "isomarket classify --spec x.json";
  run.config_hash = 0xabcdef;
  run.add("entries", 3.0);
  run.add("gap", 1e-12, 1e-10, true);
  const auto csv = run.to_csv();
  CHECK(csv.find("# command: isomarket classify --spec x.json\n") !=
        std::string::npos);
  CHECK(csv.find("entries,3,,-\n") != std::string::npos);
  CHECK(csv.find("gap,9.9999999999999998e-13,1e-10,pass\n") != std::string::npos);
  CHECK(run.all_passed());

  run.add("bad", 2.0, 1.0, false);
  CHECK_FALSE(run.all_passed());

  CHECK_THROWS_AS(report::series_csv({"a"}, {{1.0}, {2.0}}), InvalidInput);
}
