#ifndef BQ_BQ_HPP
#define BQ_BQ_HPP

// Free-space pseudo-spectral solver and verification harness for the viscous
// Boussinesq system in mild form: grids and padded transforms, Oseen-type
// kernel tables, Duhamel operators, the ETD2 simulator, decay/growth
// diagnostics and the experiment CLI plumbing.

#include "bq/grid.hpp"
#include "bq/fft.hpp"
#include "bq/operators.hpp"
#include "bq/norms.hpp"
#include "bq/kernels.hpp"
#include "bq/spaces.hpp"
#include "bq/duhamel.hpp"
#include "bq/solver.hpp"
#include "bq/diagnostics.hpp"
#include "bq/io.hpp"
#include "bq/config.hpp"
#include "bq/scenarios.hpp"

#endif  // BQ_BQ_HPP
