// Copyright 2026 The corrfed Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "corrfed/privacy.h"

#include <cmath>

#include <gtest/gtest.h>
#include "corrfed/factorization.h"
#include "test_util.h"

namespace corrfed {
namespace {

TEST(RhoTest, KnownBudgets) {
  ASSERT_OK_AND_ASSIGN(double rho, RhoFromEpsDelta(2.0, 1e-3));
  EXPECT_NEAR(rho, 0.12697, 1e-4);
  ASSERT_OK_AND_ASSIGN(rho, RhoFromEpsDelta(0.5, 1e-3));
  EXPECT_NEAR(rho, 0.008735, 1e-5);
  ASSERT_OK_AND_ASSIGN(rho, RhoFromEpsDelta(3.0, 1.0));
  EXPECT_DOUBLE_EQ(rho, 3.0);
}

TEST(RhoTest, RejectsOutOfDomain) {
  EXPECT_EQ(RhoFromEpsDelta(0.0, 1e-3).status().code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(RhoFromEpsDelta(-1.0, 1e-3).status().code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(RhoFromEpsDelta(1.0, 0.0).status().code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(RhoFromEpsDelta(1.0, 1.5).status().code(),
            absl::StatusCode::kInvalidArgument);
}

TEST(RhoTest, MonotoneAndBoundedBySmallEpsilonForm) {
  for (double delta : {1e-6, 1e-3, 0.1}) {
    const double log_inv = std::log(1.0 / delta);
    double prev = 0.0;
    for (double eps = 0.01; eps < 10.0; eps *= 1.5) {
      ASSERT_OK_AND_ASSIGN(double rho, RhoFromEpsDelta(eps, delta));
      EXPECT_GT(rho, prev);
      prev = rho;
      EXPECT_LE(rho, ApproximateRho(eps, delta) * (1.0 + 0.25 * eps / log_inv));
    }
    ASSERT_OK_AND_ASSIGN(double tiny, RhoFromEpsDelta(1e-4, delta));
    EXPECT_NEAR(tiny / ApproximateRho(1e-4, delta), 1.0, 1e-3);
  }
  ASSERT_OK_AND_ASSIGN(double a, RhoFromEpsDelta(1.0, 1e-5));
  ASSERT_OK_AND_ASSIGN(double b, RhoFromEpsDelta(1.0, 1e-2));
  EXPECT_LT(a, b);
}

TEST(SensitivityTest, KnownValues) {
  ASSERT_OK_AND_ASSIGN(Factorization id, BuildIdentity(4));
  ASSERT_OK_AND_ASSIGN(Factorization bt, BuildBinaryTree(4));
  EXPECT_DOUBLE_EQ(Sensitivity(1.0, id), 2.0);
  EXPECT_NEAR(Sensitivity(1.0, bt), 3.4641, 1e-4);
  EXPECT_EQ(Sensitivity(0.0, bt), 0.0);
}

TEST(CalibrateTest, KnownVariances) {
  ASSERT_OK_AND_ASSIGN(Factorization id, BuildIdentity(4));
  ASSERT_OK_AND_ASSIGN(Factorization bt, BuildBinaryTree(4));
  ASSERT_OK_AND_ASSIGN(PrivacyBudget b, Calibrate(2.0, 1e-3, 1.0, id));
  EXPECT_NEAR(b.noise_variance, 15.752, 0.01);
  EXPECT_NEAR(b.noise_variance, b.sensitivity * b.sensitivity / (2 * b.rho),
              1e-12);
  ASSERT_OK_AND_ASSIGN(b, Calibrate(2.0, 1e-3, 1.0, bt));
  EXPECT_NEAR(b.noise_variance, 47.26, 0.05);
  ASSERT_OK_AND_ASSIGN(b, Calibrate(0.5, 1.0, 1.0, id));
  EXPECT_DOUBLE_EQ(b.noise_variance, 4.0);
}

TEST(CalibrateTest, VarianceScalesAndOrders) {
  for (int steps : {4, 16, 100}) {
    ASSERT_OK_AND_ASSIGN(Factorization id, BuildIdentity(steps));
    ASSERT_OK_AND_ASSIGN(Factorization tp, BuildToeplitz(steps));
    ASSERT_OK_AND_ASSIGN(Factorization bt, BuildBinaryTree(steps));
    ASSERT_OK_AND_ASSIGN(PrivacyBudget vi, Calibrate(2.0, 1e-3, 1.0, id));
    ASSERT_OK_AND_ASSIGN(PrivacyBudget vt, Calibrate(2.0, 1e-3, 1.0, tp));
    ASSERT_OK_AND_ASSIGN(PrivacyBudget vb, Calibrate(2.0, 1e-3, 1.0, bt));
    EXPECT_LE(vi.noise_variance, vt.noise_variance);
    EXPECT_LE(vt.noise_variance, vb.noise_variance);
    ASSERT_OK_AND_ASSIGN(PrivacyBudget doubled, Calibrate(2.0, 1e-3, 2.0, tp));
    EXPECT_NEAR(doubled.noise_variance, 4.0 * vt.noise_variance, 1e-9);
    ASSERT_OK_AND_ASSIGN(PrivacyBudget looser, Calibrate(4.0, 1e-3, 1.0, tp));
    EXPECT_LT(looser.noise_variance, vt.noise_variance);
  }
}

}  // namespace
}  // namespace corrfed
