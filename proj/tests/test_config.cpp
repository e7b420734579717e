// SPDX-License-Identifier: Apache-2.0
//
// Copyright (C) 2026 The zonecsi authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include "zonecsi/config.hpp"

using namespace zonecsi;

namespace {

std::string error_text(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidConfig);
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, Defaults) {
  const ExperimentConfig c;
  EXPECT_EQ(c.n_c, 32);
  EXPECT_EQ(c.codeword_len, 64);
  EXPECT_EQ(c.zones, 8);
  EXPECT_EQ(c.split_train_count, 8000);
  const auto m = c.resolved_methods();
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0], (MethodSpec{1, 4}));
  EXPECT_EQ(m[1], (MethodSpec{8, 4}));
}

TEST(Config, ParsesOverridesAndComments) {
  const auto c = parse_config(
      "# comment\n"
      "  model.beta = 16  \n"
      "zones.b=4\n"
      "\n"
      "model.activation = linear\n"
      "mobility.policy = cache\n"
      "transform.normalizer = max-abs\n"
      "experiment.methods = 1x16, 4x16\n");
  EXPECT_EQ(c.beta, 16);
  EXPECT_EQ(c.zones, 4);
  EXPECT_EQ(c.activation, Activation::Linear);
  EXPECT_EQ(c.policy, CachePolicy::Lru);
  EXPECT_EQ(c.normalizer, NormalizerKind::MaxAbs);
  EXPECT_EQ(c.resolved_methods(), (std::vector<MethodSpec>{{1, 16}, {4, 16}}));
}

TEST(Config, UnknownKeyIsNamed) {
  const std::string what = error_text("model.betta = 3\n");
  EXPECT_NE(what.find("model.betta"), std::string::npos);
}

TEST(Config, MalformedValuesRejected) {
  EXPECT_NE(error_text("model.beta = four\n").find("model.beta"), std::string::npos);
  EXPECT_NE(error_text("zones.b = -1\n").find("zones.b"), std::string::npos);
  EXPECT_NE(error_text("model.activation = relu\n").find("model.activation"), std::string::npos);
  EXPECT_NE(error_text("experiment.methods = 8by4\n").find("experiment.methods"), std::string::npos);
  EXPECT_NE(error_text("no equals sign\n").find("line 1"), std::string::npos);
  EXPECT_NE(error_text("train.lr = 1e-3x\n").find("train.lr"), std::string::npos);
}

TEST(Config, EveryKeyIsSettable) {
  for (const auto& k : config_keys()) EXPECT_FALSE(k.empty());
  EXPECT_GE(config_keys().size(), 40u);
}

TEST(Config, HashIsStableAndSensitive) {
  const ExperimentConfig a;
  EXPECT_EQ(config_hash(a), config_hash(ExperimentConfig{}));
  EXPECT_EQ(canonical_config(a), canonical_config(parse_config("# nothing\n")));
  for (const std::string kv : {"train.seed = 2", "scene.seed = 9", "train.lr = 0.002",
                               "zones.b = 4", "transform.normalizer = max-abs",
                               "mobility.cache_capacity = 3"}) {
    EXPECT_NE(config_hash(parse_config(kv)), config_hash(a)) << kv;
  }
}
