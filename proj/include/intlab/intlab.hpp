#pragma once

// Umbrella header.

#include "bachet.hpp"
#include "catmap.hpp"
#include "config.hpp"
#include "constraints.hpp"
#include "errors.hpp"
#include "euler_top.hpp"
#include "experiments.hpp"
#include "linalg.hpp"
#include "ode.hpp"
#include "oscillator.hpp"
#include "polynomial.hpp"
#include "quadrature.hpp"
#include "quadrics.hpp"
#include "random.hpp"
#include "rational.hpp"
#include "report.hpp"
