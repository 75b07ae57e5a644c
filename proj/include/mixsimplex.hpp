#pragma once

// Umbrella header.

#include "mixsimplex/errors.hpp"
#include "mixsimplex/random.hpp"
#include "mixsimplex/special.hpp"
#include "mixsimplex/quadrature.hpp"
#include "mixsimplex/stats.hpp"
#include "mixsimplex/simplex.hpp"
#include "mixsimplex/face_gibbs.hpp"
#include "mixsimplex/mixed_dirichlet.hpp"
#include "mixsimplex/glm.hpp"
#include "mixsimplex/extrinsic.hpp"
#include "mixsimplex/info_theory.hpp"
