#ifndef MEMDP_MEMDP_HPP
#define MEMDP_MEMDP_HPP

// Solver library for multiple-environment Markov decision processes:
// qualitative almost-sure and limit-sure parity analysis with strategy
// synthesis, an approximate gap solver for quantitative thresholds, exact
// strategy evaluation, and seeded simulation.

#include "memdp/almost_sure.hpp"
#include "memdp/errors.hpp"
#include "memdp/evaluate.hpp"
#include "memdp/generators.hpp"
#include "memdp/graph.hpp"
#include "memdp/limit_sure.hpp"
#include "memdp/linalg.hpp"
#include "memdp/model.hpp"
#include "memdp/model_io.hpp"
#include "memdp/quantitative.hpp"
#include "memdp/rational.hpp"
#include "memdp/rng.hpp"
#include "memdp/strategy.hpp"

#endif
