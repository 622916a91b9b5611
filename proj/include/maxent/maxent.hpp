#pragma once

#include "maxent/csv.hpp"
#include "maxent/dataset.hpp"
#include "maxent/error.hpp"
#include "maxent/eval.hpp"
#include "maxent/oracle.hpp"
#include "maxent/polynomial.hpp"
#include "maxent/predicate.hpp"
#include "maxent/query.hpp"
#include "maxent/schema.hpp"
#include "maxent/solver.hpp"
#include "maxent/statistics.hpp"
#include "maxent/summary.hpp"
#include "maxent/summation.hpp"
