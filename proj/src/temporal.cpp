#include "stfilter/temporal.hpp"

#include <iostream>
#include <numeric>
#include <string>
#include <vector>

namespace stf {

namespace {

// Averages `factor` consecutive frames of one plane, rounding half-up.
void average_plane(const std::vector<uint8_t>& src, std::vector<uint8_t>& dst,
                   size_t samples_per_frame, int out_frames, int factor) {
    std::vector<uint32_t> acc(samples_per_frame);
    for (int o = 0; o < out_frames; ++o) {
        std::fill(acc.begin(), acc.end(), 0u);
        for (int k = 0; k < factor; ++k) {
            const uint8_t* frame =
                src.data() + (static_cast<size_t>(o) * factor + k) * samples_per_frame;
            for (size_t i = 0; i < samples_per_frame; ++i)
                acc[i] += frame[i];
        }
        uint8_t* out = dst.data() + static_cast<size_t>(o) * samples_per_frame;
        for (size_t i = 0; i < samples_per_frame; ++i)
            out[i] = static_cast<uint8_t>((2 * acc[i] + factor) / (2 * factor));
    }
}

}  // namespace

VideoVolume downscale_temporal(const VideoVolume& v, const DownscaleSpec& spec) {
    v.validate();
    if (spec.factor <= 0)
        throw DataError("downscale factor must be >= 1, got " + std::to_string(spec.factor));
    if (!spec.allow_any_factor && spec.factor != 1 && spec.factor != 2 && spec.factor != 4)
        throw DataError("downscale factor " + std::to_string(spec.factor) +
                        " is outside {1, 2, 4}; pass allow_any_factor to override");
    if (spec.factor > v.frames)
        throw DataError("downscale factor " + std::to_string(spec.factor) + " exceeds the " +
                        std::to_string(v.frames) + "-frame input");
    if (spec.factor == 1)
        return v;

    int out_frames = v.frames / spec.factor;
    int dropped = v.frames % spec.factor;
    if (dropped > 0)
        std::cerr << "stfilter: warning: dropping " << dropped
                  << " trailing frame(s) not filling a group of " << spec.factor << "\n";

    VideoVolume out;
    out.width = v.width;
    out.height = v.height;
    out.frames = out_frames;
    out.fps = FrameRate{v.fps.num, v.fps.den * static_cast<uint32_t>(spec.factor)}.reduced();
    out.luma.resize(static_cast<size_t>(out_frames) * out.luma_samples_per_frame());
    out.cb.resize(static_cast<size_t>(out_frames) * out.chroma_samples_per_frame());
    out.cr.resize(out.cb.size());

    average_plane(v.luma, out.luma, v.luma_samples_per_frame(), out_frames, spec.factor);
    average_plane(v.cb, out.cb, v.chroma_samples_per_frame(), out_frames, spec.factor);
    average_plane(v.cr, out.cr, v.chroma_samples_per_frame(), out_frames, spec.factor);

    out.validate();
    return out;
}

}  // namespace stf
