#pragma once

#include "sectlab/bodies.hpp"
#include "sectlab/bounds.hpp"
#include "sectlab/diameter.hpp"
#include "sectlab/ensembles.hpp"
#include "sectlab/error.hpp"
#include "sectlab/harness.hpp"
#include "sectlab/kernels.hpp"
#include "sectlab/parallel.hpp"
#include "sectlab/proofkit.hpp"
#include "sectlab/rng.hpp"
#include "sectlab/widths.hpp"
