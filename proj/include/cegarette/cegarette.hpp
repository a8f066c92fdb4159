#pragma once

#include "abstraction.hpp"
#include "bounds.hpp"
#include "errors.hpp"
#include "harness.hpp"
#include "io.hpp"
#include "loop.hpp"
#include "network.hpp"
#include "preprocess.hpp"
#include "random.hpp"
#include "simplex.hpp"
#include "solver.hpp"
#include "tightening.hpp"
