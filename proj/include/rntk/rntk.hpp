#pragma once

#include "rntk/errors.hpp"
#include "rntk/special.hpp"
#include "rntk/quadrature.hpp"
#include "rntk/kernel.hpp"
#include "rntk/spectral.hpp"
#include "rntk/sampling.hpp"
#include "rntk/regression.hpp"
#include "rntk/finite_width.hpp"
#include "rntk/report.hpp"
#include "rntk/experiments.hpp"
