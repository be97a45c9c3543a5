#pragma once

#include "stfilter/video.hpp"

namespace stf {

// Integer frame-rate reduction factor. 1, 2 and 4 are accepted by default;
// other integers only with the explicit allow_any_factor escape hatch.
struct DownscaleSpec {
    int factor = 1;
    bool allow_any_factor = false;
};

// Frame averaging: each output frame is the per-sample arithmetic mean of
// `factor` consecutive input frames (all three planes), rounded half-up.
// Output frame count is floor(input / factor); trailing remainder frames are
// dropped with a warning. The frame rate divides by the factor.
VideoVolume downscale_temporal(const VideoVolume& v, const DownscaleSpec& spec);

}  // namespace stf
