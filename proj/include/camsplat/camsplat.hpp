// Copyright Contributors to the camsplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "camsplat/adam.hpp"
#include "camsplat/cameras_io.hpp"
#include "camsplat/config.hpp"
#include "camsplat/diagnostics.hpp"
#include "camsplat/directions.hpp"
#include "camsplat/errors.hpp"
#include "camsplat/losses.hpp"
#include "camsplat/math.hpp"
#include "camsplat/occlusion.hpp"
#include "camsplat/optimize.hpp"
#include "camsplat/parallel.hpp"
#include "camsplat/pipeline.hpp"
#include "camsplat/ply.hpp"
#include "camsplat/pointcam.hpp"
#include "camsplat/render.hpp"
#include "camsplat/rng.hpp"
#include "camsplat/synth.hpp"
#include "camsplat/types.hpp"
#include "camsplat/version.hpp"
