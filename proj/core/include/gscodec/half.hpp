// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace gscodec {

/// IEEE 754 binary16 conversion, round-to-nearest-even. NaN payloads are
/// quieted; overflow saturates to infinity.
std::uint16_t float_to_half(float value);
float half_to_float(std::uint16_t bits);

/// Value after a round trip through binary16.
inline float round_to_half(float value) { return half_to_float(float_to_half(value)); }

}  // namespace gscodec
