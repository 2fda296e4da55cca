#ifndef QMETRO_QMETRO_HPP
#define QMETRO_QMETRO_HPP

// Umbrella header for the incompatibility trade-off toolkit: information
// geometry of pure-state families, the tight bound on Tr(F_Q^{-1} F_C),
// construction of projective measurements saturating it, and the biphoton
// radar application.

#include "qmetro/builtins.hpp"
#include "qmetro/information.hpp"
#include "qmetro/measurement.hpp"
#include "qmetro/model.hpp"
#include "qmetro/numerics.hpp"
#include "qmetro/radar.hpp"
#include "qmetro/types.hpp"

#endif  // QMETRO_QMETRO_HPP
