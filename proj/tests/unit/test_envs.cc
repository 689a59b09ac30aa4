#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "sellf/envs/env_spec.h"
#include "sellf/envs/loader.h"
#include "support/paths.h"

namespace sellf::envs {
namespace {

const EnvSpec& Env(const std::string& name) {
  static std::map<std::string, EnvSpec> cache;
  auto it = cache.find(name);
  if (it == cache.end()) it = cache.emplace(name, LoadEnv(testing::DataDir(), name)).first;
  return it->second;
}

std::string ReadText(const std::string& path) {
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

TEST(LendingTransition, FollowsRepaymentAndDefault) {
  EXPECT_EQ(LendingTransition(5, 1, 1), 6);
  EXPECT_EQ(LendingTransition(5, 1, 0), 4);
  EXPECT_EQ(LendingTransition(5, 0, 0), 5);
  EXPECT_EQ(LendingTransition(5, 0, 1), 5);
  EXPECT_EQ(LendingTransition(10, 1, 1), 10);
  EXPECT_EQ(LendingTransition(1, 1, 0), 1);
  EXPECT_THROW(LendingTransition(0, 1, 1), EnvironmentError);
  EXPECT_THROW(LendingTransition(11, 0, 0), EnvironmentError);
}

TEST(RecidivismTransition, PriorsAdvanceOnReoffenseAfterBail) {
  const Features x = RecidivismFeatures({2, 3});
  const EnvSpec& env = Env("recidivism");
  EXPECT_EQ(DecodeRecidivism(env.Transition(x, 1, 0)).priors, 4);
  EXPECT_EQ(DecodeRecidivism(env.Transition(x, 1, 0)).age, 2);
  EXPECT_EQ(env.Transition(x, 0, 0), x);
  EXPECT_EQ(env.Transition(x, 0, 1), x);
  EXPECT_EQ(env.Transition(x, 1, 1), x);
  const Features capped = RecidivismFeatures({2, 8});
  EXPECT_EQ(env.Transition(capped, 1, 0), capped);
}

TEST(RecidivismTransition, RejectsMalformedOneHot) {
  Features x = RecidivismFeatures({2, 3});
  x[0] = 1.0;  // two ages active
  EXPECT_THROW(DecodeRecidivism(x), EnvironmentError);
  EXPECT_THROW(Env("recidivism").Transition(x, 1, 0), EnvironmentError);
}

Features SchoolPoint(const EnvSpec& env, int age, double indicator) {
  Features x = env.support.front();
  for (int k = 0; k < env.school.age_classes; ++k) x[env.school.age_offset + k] = 0.0;
  x[env.school.age_offset + age] = 1.0;
  x[env.school.indicator_index] = indicator;
  return x;
}

TEST(SchoolTransition, AgesAndSetsIndicator) {
  const EnvSpec& env = Env("school");
  const Features young = SchoolPoint(env, 0, 0.0);
  const Features next = env.Transition(young, 1, 0);
  EXPECT_EQ(SchoolAgeClass(env.school, next), 1);
  EXPECT_EQ(next[env.school.indicator_index], 1.0);
  const Features by_label = env.Transition(young, 0, 1);
  EXPECT_EQ(by_label[env.school.indicator_index], 1.0);
  const Features untouched = env.Transition(young, 0, 0);
  EXPECT_EQ(untouched[env.school.indicator_index], 0.0);

  const Features old = SchoolPoint(env, env.school.age_classes - 1, 1.0);
  EXPECT_EQ(env.Transition(old, 0, 0), old);
}

TEST(SchoolTransition, RejectsMalformedEncoding) {
  const EnvSpec& env = Env("school");
  Features x = SchoolPoint(env, 0, 0.0);
  x[env.school.indicator_index] = 0.5;
  EXPECT_THROW(env.Transition(x, 1, 1), EnvironmentError);
  Features two_ages = SchoolPoint(env, 0, 0.0);
  two_ages[env.school.age_offset + 2] = 1.0;
  EXPECT_THROW(env.Transition(two_ages, 1, 1), EnvironmentError);
}

// Mean over the initial population of alpha with the indicator forced.
double MeanAlpha(const EnvSpec& env, double indicator) {
  double total = 0.0;
  for (int z = 0; z < env.group_count; ++z) {
    for (std::size_t k = 0; k < env.support.size(); ++k) {
      Features x = env.support[k];
      x[env.school.indicator_index] = indicator;
      total += env.group_prior[z] * env.init_probs[z][k] * env.Alpha(x, z);
    }
  }
  return total;
}

TEST(SchoolAlpha, IndicatorLiftsMeanProbabilityByOneHalf) {
  for (const char* name : {"school", "school_continuous"}) {
    const EnvSpec& env = Env(name);
    EXPECT_NEAR(MeanAlpha(env, 1.0) - MeanAlpha(env, 0.0), 0.5, 1e-6) << name;
  }
}

TEST(LoadEnv, Lending) {
  const EnvSpec& env = Env("lending");
  EXPECT_EQ(env.kind, EnvKind::kLending);
  EXPECT_EQ(env.support.size(), 10u);
  EXPECT_EQ(env.feature_dim, 10);
  EXPECT_EQ(env.cost, 0.8);
  EXPECT_EQ(env.group_prior, (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(env.input_dim(), 12);
}

TEST(LoadEnv, Recidivism) {
  const EnvSpec& env = Env("recidivism");
  EXPECT_EQ(env.cost, 0.9);
  EXPECT_EQ(env.feature_dim, 13);
  EXPECT_EQ(env.support.size(), 40u);
}

TEST(LoadEnv, SchoolBaseRate) {
  const EnvSpec& env = Env("school");
  EXPECT_EQ(env.cost, 0.5);
  EXPECT_EQ(env.feature_dim, 127);
  EXPECT_EQ(env.school.categorical_dim, 126);
  EXPECT_NEAR(env.group_prior[0], 0.62, 1e-12);
  EXPECT_NEAR(env.group_prior[1], 0.38, 1e-12);
  double base = 0.0;
  for (int z = 0; z < 2; ++z) {
    for (std::size_t k = 0; k < env.support.size(); ++k) {
      base += env.group_prior[z] * env.init_probs[z][k] * env.Alpha(env.support[k], z);
    }
  }
  EXPECT_NEAR(base, 0.37, 1e-6);
}

TEST(LoadEnv, SchoolContinuousAddsThreeBoundedScores) {
  const EnvSpec& env = Env("school_continuous");
  EXPECT_EQ(env.feature_dim, 130);
  EXPECT_EQ(env.school.score_count, 3);
  for (const auto& x : env.support) {
    for (int k = 0; k < 3; ++k) {
      EXPECT_GE(x[127 + k], 0.0);
      EXPECT_LE(x[127 + k], 1000.0);
    }
  }
  // Scores are scaled into the network input, everything else is copied.
  const auto input = env.EncodeInput(env.support[0], 1);
  EXPECT_DOUBLE_EQ(input[127], env.support[0][127] * 0.001);
  EXPECT_EQ(input[130], 0.0);
  EXPECT_EQ(input[131], 1.0);
}

TEST(LoadEnv, LendingAlphaIsMonotoneInScore) {
  const EnvSpec& env = Env("lending");
  for (int z = 0; z < 2; ++z) {
    for (int s = 1; s < 10; ++s) {
      EXPECT_LE(env.Alpha(LendingFeatures(s), z), env.Alpha(LendingFeatures(s + 1), z));
    }
  }
}

TEST(LoadEnv, TransitionsStayInsideTheDomain) {
  for (const char* name : {"lending", "recidivism", "school", "school_continuous"}) {
    const EnvSpec& env = Env(name);
    for (std::size_t k = 0; k < env.support.size(); k += 17) {
      for (int a = 0; a < 2; ++a) {
        for (int y = 0; y < 2; ++y) {
          EXPECT_NO_THROW(env.ValidateFeatures(env.Transition(env.support[k], a, y)));
        }
      }
    }
  }
}

TEST(LoadEnv, RowNotSummingToOneNamesTheRow) {
  auto j = nlohmann::json::parse(ReadText(testing::DataDir() + "/lending.json"));
  for (auto& p : j["init_probs"][1]) p = p.get<double>() * 0.9;
  try {
    ParseEnv(j.dump());
    FAIL() << "expected a load error";
  } catch (const LoadError& e) {
    EXPECT_NE(std::string(e.what()).find("init_probs row 1"), std::string::npos) << e.what();
  }
}

TEST(LoadEnv, AlphaOutsideUnitIntervalIsRejected) {
  auto j = nlohmann::json::parse(ReadText(testing::DataDir() + "/lending.json"));
  j["alpha"]["values"][0][3] = 1.5;
  EXPECT_THROW(ParseEnv(j.dump()), LoadError);
}

TEST(LoadEnv, MissingFileAndUnknownName) {
  EXPECT_THROW(LoadEnv("/nonexistent-dir", "lending"), LoadError);
  EXPECT_THROW(LoadEnv(testing::DataDir(), "casino"), ConfigError);
}

TEST(ExportEnv, RoundTripsEveryTable) {
  for (const char* name : {"lending", "recidivism", "school", "school_continuous"}) {
    const EnvSpec& env = Env(name);
    const EnvSpec back = ParseEnv(ExportEnv(env));
    EXPECT_EQ(back.support, env.support) << name;
    EXPECT_EQ(back.init_probs, env.init_probs) << name;
    EXPECT_EQ(back.group_prior, env.group_prior) << name;
    EXPECT_EQ(back.cost, env.cost) << name;
    EXPECT_EQ(ExportEnv(back), ExportEnv(env)) << name;
  }
}

TEST(DefaultDataDir, HonorsEnvironmentVariable) {
  ::setenv("SELLF_DATA_DIR", "/tmp/somewhere", 1);
  EXPECT_EQ(DefaultDataDir(), "/tmp/somewhere");
  ::unsetenv("SELLF_DATA_DIR");
  EXPECT_NE(DefaultDataDir(), "/tmp/somewhere");
}

}  // namespace
}  // namespace sellf::envs
