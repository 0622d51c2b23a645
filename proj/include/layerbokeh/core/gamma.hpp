#pragma once

#include "layerbokeh/core/image.hpp"

namespace layerbokeh {

// Alpha channels pass through both transforms unchanged: alpha is coverage,
// not irradiance.

/// v -> v^gamma on color channels. Requires an encoded image.
ImageBuffer gamma_decode(const ImageBuffer& image, double gamma);

/// v -> v^(1/gamma) on color channels. Requires a linear image.
ImageBuffer gamma_encode(const ImageBuffer& image, double gamma);

}  // namespace layerbokeh
