#pragma once

#include "rdr/errors.hpp"
#include "rdr/io.hpp"
#include "rdr/oracles.hpp"
#include "rdr/probability.hpp"
#include "rdr/problem.hpp"
#include "rdr/region.hpp"
#include "rdr/solver.hpp"
#include "rdr/tensor.hpp"
