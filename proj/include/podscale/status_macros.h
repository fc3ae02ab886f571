/* Copyright 2026 The Podscale Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef PODSCALE_STATUS_MACROS_H_
#define PODSCALE_STATUS_MACROS_H_

#include <cstdio>
#include <cstdlib>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

#define PODSCALE_CONCAT_IMPL(a, b) a##b
#define PODSCALE_CONCAT(a, b) PODSCALE_CONCAT_IMPL(a, b)

#define PODSCALE_RETURN_IF_ERROR(expr)   \
  do {                                   \
    const absl::Status _status = (expr); \
    if (!_status.ok()) return _status;   \
  } while (0)

#define PODSCALE_ASSIGN_OR_RETURN_IMPL(tmp, lhs, rexpr) \
  auto tmp = (rexpr);                                   \
  if (!tmp.ok()) return tmp.status();                   \
  lhs = std::move(*tmp)

#define PODSCALE_ASSIGN_OR_RETURN(lhs, rexpr)                                \
  PODSCALE_ASSIGN_OR_RETURN_IMPL(PODSCALE_CONCAT(_statusor_, __LINE__), lhs, \
                                 rexpr)

// Internal invariant check. Violations are programming errors, not inputs.
#define PODSCALE_CHECK(cond)                                                \
  do {                                                                      \
    if (!(cond)) {                                                          \
      std::fprintf(stderr, "%s:%d: check failed: %s\n", __FILE__, __LINE__, \
                   #cond);                                                  \
      std::abort();                                                         \
    }                                                                       \
  } while (0)

#endif  // PODSCALE_STATUS_MACROS_H_
