/*
 * Copyright 2026 The dlflow Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include "dlflow/accelerator.hpp"

namespace dlflow {
namespace {

AcceleratorProfile affine(double c0, double c1) {
  AcceleratorProfile p;
  p.name = "test";
  p.c0_ms = c0;
  p.c1_ms = c1;
  return p;
}

Series series(std::vector<std::int32_t> f) {
  Series s;
  s.features = std::move(f);
  return s;
}

TEST(Latency, AffineExample) {
  const AcceleratorProfile p = affine(1.0, 0.05);
  EXPECT_DOUBLE_EQ(p.latency_ms(128), 7.4);
  EXPECT_EQ(p.latency(128), SimTime(7400));
}

TEST(Rate, Examples) {
  const AcceleratorProfile p = affine(1.0, 0.05);
  EXPECT_NEAR(p.rate(8), 8.0 / 1.4e-3, 1e-6);
  EXPECT_NEAR(p.rate(8), 5714.29, 0.01);
  // Large batches approach 1 / c1 per millisecond.
  EXPECT_NEAR(p.rate(1'000'000) / 1000.0, 1.0 / 0.05, 0.01);
  const AcceleratorProfile doubled = affine(2.0, 0.1);
  for (std::size_t b : {8, 64, 1024}) EXPECT_NEAR(doubled.rate(b), p.rate(b) / 2.0, 1e-6);
}

TEST(Latency, MeasuredTableInterpolates) {
  AcceleratorProfile p = affine(0, 0);
  p.latency_table = {{8, 1.0}, {16, 2.0}, {32, 2.5}};
  EXPECT_DOUBLE_EQ(p.latency_ms(8), 1.0);
  EXPECT_DOUBLE_EQ(p.latency_ms(12), 1.5);
  EXPECT_DOUBLE_EQ(p.latency_ms(24), 2.25);
  EXPECT_DOUBLE_EQ(p.latency_ms(64), 3.5);
  EXPECT_DOUBLE_EQ(p.latency_ms(4), 1.0);
}

TEST(Profile, ValidateRejectsBadValues) {
  EXPECT_THROW(affine(-1.0, 0.1).validate(), std::invalid_argument);
  EXPECT_THROW(affine(0.0, 0.0).validate(), std::invalid_argument);
  AcceleratorProfile p = affine(1.0, 0.1);
  p.chips = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  for (const std::string& name : builtin_profile_names()) {
    EXPECT_NO_THROW(builtin_profile(name)->validate()) << name;
  }
  EXPECT_FALSE(builtin_profile("fpga"));
}

TEST(Profile, TpuChipPowerRatio) {
  const AcceleratorProfile tpu1 = *builtin_profile("tpu1");
  EXPECT_NEAR(quadrant(tpu1, 8).power_ratio, 12.8 / 30.0, 1e-12);
  const AcceleratorProfile tpu4 = *builtin_profile("tpu4");
  EXPECT_NEAR(quadrant(tpu4, 8).power_ratio, 4 * 12.8 / 30.0, 1e-12);
}

TEST(Profile, TpuLeadsSmallBatchesGpuLeadsLarge) {
  const AcceleratorProfile tpu = *builtin_profile("tpu1");
  const AcceleratorProfile gpu = *builtin_profile("gpu");
  for (std::size_t b : {8, 16, 32, 64}) EXPECT_GT(tpu.rate(b), gpu.rate(b)) << b;
  for (std::size_t b : {512, 1024}) EXPECT_GT(gpu.rate(b), tpu.rate(b)) << b;
}

TEST(Quadrant, Boundaries) {
  QuadrantPoint q = classify_quadrant(12.8, 50'000);
  EXPECT_DOUBLE_EQ(q.rate_ratio, 1.0);
  EXPECT_EQ(q.quadrant, Quadrant::kDesirable);
  q = classify_quadrant(30.0, 25'000);
  EXPECT_DOUBLE_EQ(q.power_ratio, 1.0);
  EXPECT_DOUBLE_EQ(q.rate_ratio, 0.5);
  EXPECT_EQ(q.quadrant, Quadrant::kTooSlow);
  EXPECT_EQ(classify_quadrant(60.0, 60'000).quadrant, Quadrant::kTooHungry);
  EXPECT_EQ(classify_quadrant(60.0, 10'000).quadrant, Quadrant::kAvoid);
}

TEST(Chip, InferChargesFullLatencyAndSkipsSentinels) {
  const AcceleratorProfile p = affine(1.0, 0.05);
  const LabelOracle oracle(200);
  AcceleratorChip chip(p, oracle);
  std::vector<Series> batch(8, Series::sentinel(3));
  const InferenceResult all_pad = chip.infer(batch, SimTime(100));
  EXPECT_TRUE(all_pad.labels.empty());
  EXPECT_EQ(all_pad.completion, SimTime(100 + 1400));
  EXPECT_EQ(all_pad.busy_real, SimTime(0));
  EXPECT_EQ(all_pad.busy_padding, SimTime(1400));
  EXPECT_FALSE(chip.idle_at(SimTime(1000)));
  EXPECT_THROW(chip.infer(batch, SimTime(1000)), std::logic_error);
  EXPECT_TRUE(chip.idle_at(SimTime(1500)));
}

TEST(Chip, PaddedInferenceMatchesExplicitPadding) {
  const AcceleratorProfile p = affine(1.0, 0.05);
  const LabelOracle oracle(200);
  AcceleratorChip a(p, oracle);
  AcceleratorChip b(p, oracle);
  std::vector<Series> real{series({1, 2, 3}), series({4, 5, 6}), series({7, 8, 9})};
  const Batch padded = pad(real, 5, 3);
  const InferenceResult x = a.infer(padded.slots, SimTime(0));
  const InferenceResult y = b.infer_padded(real, 8, SimTime(0));
  EXPECT_EQ(x.labels, y.labels);
  EXPECT_EQ(x.completion, y.completion);
  EXPECT_EQ(x.busy_real, y.busy_real);
  EXPECT_EQ(x.busy_real + x.busy_padding, p.latency(8));
  EXPECT_THROW(b.infer_padded(real, 2, SimTime(10'000)), BatchSizeUnsupported);
}

TEST(Chip, RejectsUnsupportedSize) {
  const AcceleratorProfile p = affine(1.0, 0.05);
  const LabelOracle oracle(200);
  AcceleratorChip chip(p, oracle);
  std::vector<Series> batch(12, series({1}));
  EXPECT_THROW(chip.infer(batch, SimTime(0)), BatchSizeUnsupported);
}

TEST(Oracle, DeterministicAndBounded) {
  const LabelOracle oracle(13);
  const Series s = series({1, -2, 3});
  EXPECT_EQ(oracle(s), oracle(series({1, -2, 3})));
  EXPECT_LT(oracle(s).class_id(), 13u);
  Series labelled = s;
  labelled.truth = Label(99);
  EXPECT_EQ(oracle(labelled), Label(99));
  EXPECT_EQ(LabelOracle(13, false)(labelled), oracle(s));
}

TEST(Chip, EqualBatchesGiveEqualResults) {
  const AcceleratorProfile p = *builtin_profile("tpu1");
  const LabelOracle oracle(200);
  std::vector<Series> batch;
  for (int i = 0; i < 16; ++i) batch.push_back(series({i + 1, -(i + 2)}));
  AcceleratorChip a(p, oracle);
  AcceleratorChip b(p, oracle);
  const InferenceResult x = a.infer(batch, SimTime(5));
  const InferenceResult y = b.infer(batch, SimTime(5));
  EXPECT_EQ(x.labels, y.labels);
  EXPECT_EQ(x.completion, y.completion);
}

TEST(Profile, JsonRoundTrip) {
  AcceleratorProfile p = *builtin_profile("gpu");
  p.latency_table = {{8, 3.1}, {1024, 7.0}};
  nlohmann::json j = p;
  const AcceleratorProfile q = j.get<AcceleratorProfile>();
  EXPECT_EQ(q.name, p.name);
  EXPECT_EQ(q.c0_ms, p.c0_ms);
  EXPECT_EQ(q.latency_table, p.latency_table);
  EXPECT_THROW(nlohmann::json({{"profile", "abacus"}}).get<AcceleratorProfile>(), std::invalid_argument);
}

}  // namespace
}  // namespace dlflow
