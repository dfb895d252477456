#pragma once

// Umbrella header for the relativistic Vlasov-Darwin simulator.

#include "checks.hpp"
#include "config.hpp"
#include "deposit.hpp"
#include "diagnostics.hpp"
#include "errors.hpp"
#include "fft.hpp"
#include "fields.hpp"
#include "grid.hpp"
#include "gronwall.hpp"
#include "initial_datum.hpp"
#include "io.hpp"
#include "kernel.hpp"
#include "kinematics.hpp"
#include "linalg.hpp"
#include "particles.hpp"
#include "quadrature.hpp"
#include "radial.hpp"
#include "rng.hpp"
#include "simulation.hpp"
#include "spectral.hpp"
#include "symmetry.hpp"
#include "transport.hpp"
