#pragma once

// Total-variation restoration of images with multiplicative Gamma speckle,
// solved in the log domain by split Bregman iterations.

#include "speckle/bench.hpp"
#include "speckle/bregman.hpp"
#include "speckle/error.hpp"
#include "speckle/format.hpp"
#include "speckle/image.hpp"
#include "speckle/image_io.hpp"
#include "speckle/newton_pixel.hpp"
#include "speckle/noise_model.hpp"
#include "speckle/parallel.hpp"
#include "speckle/random.hpp"
#include "speckle/tv.hpp"
