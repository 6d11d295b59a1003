#pragma once

#include "cellnet/activation.hpp"
#include "cellnet/autodiff.hpp"
#include "cellnet/complex.hpp"
#include "cellnet/error.hpp"
#include "cellnet/experiments.hpp"
#include "cellnet/fixtures.hpp"
#include "cellnet/generators.hpp"
#include "cellnet/gradcheck.hpp"
#include "cellnet/graph.hpp"
#include "cellnet/graph6.hpp"
#include "cellnet/io.hpp"
#include "cellnet/lifting.hpp"
#include "cellnet/network.hpp"
#include "cellnet/parallel.hpp"
#include "cellnet/refinement.hpp"
#include "cellnet/spectral.hpp"
#include "cellnet/train.hpp"
