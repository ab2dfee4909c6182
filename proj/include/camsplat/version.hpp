// Copyright Contributors to the camsplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace camsplat {

inline constexpr const char* kVersion = "0.1.0";

} // namespace camsplat
