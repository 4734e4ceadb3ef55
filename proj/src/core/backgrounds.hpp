#pragma once

#include <cstdint>

#include "core/image.hpp"

namespace rehand {

// Procedural human-free background: gradients, value noise, stripes or blob
// fields, chosen and parameterized by the seed. Used by dataset generation to
// stock the background corpus.
Image make_background(uint64_t seed, int width, int height);

}  // namespace rehand
