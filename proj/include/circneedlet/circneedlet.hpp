#pragma once

#include "circneedlet/bounds.hpp"
#include "circneedlet/coefficients.hpp"
#include "circneedlet/error.hpp"
#include "circneedlet/estimation.hpp"
#include "circneedlet/experiment.hpp"
#include "circneedlet/fields.hpp"
#include "circneedlet/io.hpp"
#include "circneedlet/needlet.hpp"
#include "circneedlet/rng.hpp"
#include "circneedlet/stats.hpp"
#include "circneedlet/trig_polynomial.hpp"
