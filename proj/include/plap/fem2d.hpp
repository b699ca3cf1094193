#pragma once

// Planar P1 finite elements for the mixed-boundary Sobolev quotient.

#include "plap/fem2d/energy.hpp"
#include "plap/fem2d/mesh.hpp"
#include "plap/fem2d/minimize.hpp"
#include "plap/fem2d/triangulate.hpp"
