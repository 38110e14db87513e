#pragma once

#include "lowrank/error.hpp"
#include "lowrank/linalg.hpp"
#include "lowrank/random.hpp"
#include "lowrank/operators.hpp"
#include "lowrank/prox.hpp"
#include "lowrank/amfit.hpp"
#include "lowrank/solver.hpp"
#include "lowrank/problems.hpp"
#include "lowrank/io.hpp"
