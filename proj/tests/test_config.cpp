#include "doctest.h"

#include "cnav/config.hpp"

using namespace cnav;

TEST_CASE("config round-trips exactly") {
  RunConfig c = default_config(Task::LowOverhang, 0.225);
  c.trial.seed = 17;
  c.trial.planner.eta = 80.0;
  c.out_dir = "/tmp/somewhere";
  const std::string text = serialize_config(c);
  const RunConfig back = parse_config(text);
  CHECK(serialize_config(back) == text);
  CHECK(back.trial.task == Task::LowOverhang);
  CHECK(back.trial.seed == 17);
  CHECK(back.trial.planner.eta == 80.0);
  CHECK(back.trial.model.z_min == c.trial.model.z_min);
}

TEST_CASE("unknown keys are rejected") {
  CHECK_THROWS_WITH_AS(parse_config(R"({"plannerz": {}})"),
                       doctest::Contains("unknown section"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config(R"({"planner": {"etaa": 2.0}})"),
                       doctest::Contains("unknown key"), std::invalid_argument);
}

TEST_CASE("malformed json is rejected with a parse error") {
  CHECK_THROWS_WITH_AS(parse_config("{not json"), doctest::Contains("parse error"),
                       std::invalid_argument);
}

TEST_CASE("invalid values fail validation") {
  CHECK_THROWS_AS(parse_config(R"({"planner": {"eta": -1.0}})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config(R"({"sensor": {"min_range": 2.0, "max_range": 1.0}})"),
                  std::invalid_argument);
}

TEST_CASE("task fixtures apply before overrides") {
  const RunConfig c = parse_config(R"({"trial": {"task": "low-overhang", "param": 0.25}})");
  CHECK(c.trial.model.z_min == doctest::Approx(0.08));
  CHECK(c.trial.body_ref_frac == 0.0);
  const RunConfig g = parse_config(R"({"trial": {"task": "thin-gap", "param": 0.7}})");
  CHECK(g.trial.model.s_min == doctest::Approx(0.345));
}
