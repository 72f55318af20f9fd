#pragma once

#include "analytic_bounds.hpp"
#include "certificate.hpp"
#include "configuration.hpp"
#include "connectivity.hpp"
#include "estimate.hpp"
#include "geometry.hpp"
#include "knn_graph.hpp"
#include "parallel.hpp"
#include "report.hpp"
#include "rng.hpp"
#include "sampling.hpp"
#include "stats.hpp"
#include "theta_search.hpp"
