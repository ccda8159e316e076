// Copyright 2026 The llmplan Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <initializer_list>
#include <stdexcept>

namespace llmplan::detail {

inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) {
    throw std::overflow_error("64-bit byte/count arithmetic overflow");
  }
  return out;
}

inline std::uint64_t checked_product(std::initializer_list<std::uint64_t> xs) {
  std::uint64_t out = 1;
  for (std::uint64_t x : xs) out = checked_mul(out, x);
  return out;
}

inline std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out = 0;
  if (__builtin_add_overflow(a, b, &out)) {
    throw std::overflow_error("64-bit byte/count arithmetic overflow");
  }
  return out;
}

inline std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) {
  return a / b + (a % b != 0 ? 1 : 0);
}

}  // namespace llmplan::detail
