#ifndef COVBOUND_COVBOUND_HPP
#define COVBOUND_COVBOUND_HPP

#include "covbound/analysis.hpp"
#include "covbound/bound.hpp"
#include "covbound/conic.hpp"
#include "covbound/conic_solver.hpp"
#include "covbound/core.hpp"
#include "covbound/exact.hpp"
#include "covbound/parallel.hpp"

#endif /* COVBOUND_COVBOUND_HPP */
