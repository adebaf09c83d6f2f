#pragma once

#include <cstdint>
#include <string>

#include "nmrt/retarget_net.hpp"

namespace nmrt {

inline constexpr char kCheckpointMagic[4] = {'N', 'M', 'R', 'T'};
inline constexpr std::uint8_t kCheckpointVersion = 1;

/// Binary model snapshot: magic "NMRT", a version byte, a 4-byte little-endian
/// header length, the JSON header (parameter names and shapes, both domain
/// layouts, normalization stats), then every parameter's values as
/// little-endian 64-bit floats in header order. Round-trips bitwise.
void save_checkpoint(const RetargetModel& model, const std::string& path);

/// Rebuilds the model from the header, then overlays the stored parameters.
/// Throws BadMagic / VersionUnsupported / PayloadTruncated /
/// HeaderShapeMismatch.
RetargetModel load_checkpoint(const std::string& path);

/// The JSON header save_checkpoint would write (exposed for inspection).
std::string checkpoint_header_json(const RetargetModel& model);

}  // namespace nmrt
