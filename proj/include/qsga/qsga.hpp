#pragma once

/// @file qsga.hpp
/// Umbrella header.

#include "qsga/auxchain.hpp"
#include "qsga/config.hpp"
#include "qsga/core.hpp"
#include "qsga/engine.hpp"
#include "qsga/errors.hpp"
#include "qsga/experiments.hpp"
#include "qsga/oracle.hpp"
#include "qsga/random.hpp"
#include "qsga/selection.hpp"
#include "qsga/theory.hpp"
#include "qsga/variation.hpp"
