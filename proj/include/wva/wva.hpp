#pragma once

#include "wva/dynamics.hpp"
#include "wva/errors.hpp"
#include "wva/fock.hpp"
#include "wva/io.hpp"
#include "wva/measurement.hpp"
#include "wva/random.hpp"
#include "wva/reconstruction.hpp"
#include "wva/spin.hpp"
#include "wva/theory.hpp"
#include "wva/units.hpp"
