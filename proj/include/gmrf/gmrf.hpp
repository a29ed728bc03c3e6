#ifndef GMRF_GMRF_HPP
#define GMRF_GMRF_HPP

#include "gmrf/conjecture.hpp"
#include "gmrf/graph.hpp"
#include "gmrf/linalg.hpp"
#include "gmrf/maxdet.hpp"
#include "gmrf/random.hpp"
#include "gmrf/report.hpp"
#include "gmrf/series.hpp"
#include "gmrf/sphere.hpp"
#include "gmrf/witness.hpp"

#endif  // GMRF_GMRF_HPP
