#pragma once

#include "ghostrec/basis.hpp"
#include "ghostrec/config.hpp"
#include "ghostrec/diagnostics.hpp"
#include "ghostrec/ensemble_io.hpp"
#include "ghostrec/error.hpp"
#include "ghostrec/fft.hpp"
#include "ghostrec/field_sim.hpp"
#include "ghostrec/gi_recon.hpp"
#include "ghostrec/grid.hpp"
#include "ghostrec/image_io.hpp"
#include "ghostrec/measurement.hpp"
#include "ghostrec/metrics.hpp"
#include "ghostrec/objects.hpp"
#include "ghostrec/pipeline.hpp"
#include "ghostrec/rng.hpp"
#include "ghostrec/sparse_solver.hpp"
