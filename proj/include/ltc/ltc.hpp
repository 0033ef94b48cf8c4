#pragma once

// Umbrella header for the whole library.

#include "ltc/activation.hpp"
#include "ltc/bounds.hpp"
#include "ltc/cell.hpp"
#include "ltc/checkpoint.hpp"
#include "ltc/data.hpp"
#include "ltc/errors.hpp"
#include "ltc/expressivity.hpp"
#include "ltc/loss.hpp"
#include "ltc/matrix.hpp"
#include "ltc/pca.hpp"
#include "ltc/polyline.hpp"
#include "ltc/rng.hpp"
#include "ltc/solver.hpp"
#include "ltc/train.hpp"
