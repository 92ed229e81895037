#pragma once

#include "gmrw/objective.hpp"
#include "gmrw/types.hpp"

namespace gmrw {

// Standard flow color wheel rendering: hue encodes direction, saturation
// encodes magnitude. When max_magnitude <= 0 the field's own maximum is used
// (with a small floor so zero fields render neutral gray).
Image flow_to_color(const MotionField& field, double max_magnitude = 0.0);

}  // namespace gmrw
