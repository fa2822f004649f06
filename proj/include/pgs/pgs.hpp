#pragma once

#include "pgs/errors.hpp"
#include "pgs/experiment.hpp"
#include "pgs/graph.hpp"
#include "pgs/io.hpp"
#include "pgs/product.hpp"
#include "pgs/random.hpp"
#include "pgs/reconstruct.hpp"
#include "pgs/sampler.hpp"
#include "pgs/spectral.hpp"
#include "pgs/synth.hpp"
#include "pgs/version.hpp"
