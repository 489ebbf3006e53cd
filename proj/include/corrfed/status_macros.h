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

#ifndef CORRFED_STATUS_MACROS_H_
#define CORRFED_STATUS_MACROS_H_

#include "absl/status/status.h"
#include "absl/status/statusor.h"

#define CORRFED_CONCAT_INNER_(a, b) a##b
#define CORRFED_CONCAT_(a, b) CORRFED_CONCAT_INNER_(a, b)

#define CORRFED_RETURN_IF_ERROR(expr)            \
  do {                                           \
    ::absl::Status _corrfed_status = (expr);     \
    if (!_corrfed_status.ok()) return _corrfed_status; \
  } while (0)

#define CORRFED_ASSIGN_OR_RETURN_IMPL_(tmp, lhs, rexpr) \
  auto tmp = (rexpr);                                   \
  if (!tmp.ok()) return tmp.status();                   \
  lhs = std::move(tmp).value()

// Evaluates an expression returning absl::StatusOr<T>; on success assigns the
// value to `lhs`, otherwise returns the error from the enclosing function.
#define CORRFED_ASSIGN_OR_RETURN(lhs, rexpr) \
  CORRFED_ASSIGN_OR_RETURN_IMPL_(            \
      CORRFED_CONCAT_(_corrfed_statusor_, __LINE__), lhs, rexpr)

#endif  // CORRFED_STATUS_MACROS_H_
