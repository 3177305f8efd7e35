// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "gscodec/camera.hpp"
#include "gscodec/color_field.hpp"
#include "gscodec/gaussian_cloud.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace gscodec {

struct SyntheticScene {
    GaussianCloud cloud;
    std::vector<CameraPose> cameras;
};

/// Generated test scene: Gaussians inside a ball of radius ~0.8 viewed by
/// cameras on a ring. Shapes come from a small vocabulary of scale and
/// rotation prototypes; colors are smooth in position with a mild degree-1
/// view dependence. `hidden` extra Gaussians are tiny and fully transparent.
struct ToySceneOptions {
    std::size_t count = 5000;
    std::size_t hidden = 0;
    int views = 8;
    int width = 128;
    int height = 128;
    int scale_prototypes = 8;
    int rotation_prototypes = 8;
    std::uint64_t seed = 7;
};

SyntheticScene make_toy_scene(const ToySceneOptions& options = {});

/// `contributors` opaque, clearly visible Gaussians plus `decoys` with zero
/// opacity, seen by `views` cameras at width x height.
SyntheticScene make_decoy_scene(std::size_t contributors, std::size_t decoys, int views, int width,
                                int height, std::uint64_t seed);

/// Small color field sized for the toy scene (8 levels, 4..64, 2^8 tables).
FieldConfig toy_field_config();

}  // namespace gscodec
