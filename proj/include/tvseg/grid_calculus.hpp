#pragma once

#include "tvseg/field.hpp"

/// Discrete differential operators on pixel grids.
///
/// grad uses forward differences with a zero (Neumann) last row/column; div is
/// its exact negative adjoint, so <grad u, p> = -<u, div p> holds to rounding.
namespace tvseg::grid {

DualField grad(const Field3& u);

Field3 div(const DualField& p);

/// Projects every 2-vector onto the closed unit disc.
DualField project_unit_disc(const DualField& p);

/// Isotropic total variation, summed over channels.
double tv_value(const Field3& u);

}  // namespace tvseg::grid
