#ifndef RFVAR_RFVAR_HPP
#define RFVAR_RFVAR_HPP

// Umbrella header for the rfvar library: regression random forests with
// interchangeable base learners (CART, conditional-inference trees) and
// resampling schemes (bootstrap, subsampling), infinitesimal-jackknife
// prediction variances, and the simulation harness that measures how well
// those variance estimates track the truth.

#include "rfvar/cart.hpp"
#include "rfvar/citree.hpp"
#include "rfvar/common.hpp"
#include "rfvar/dataset.hpp"
#include "rfvar/digest.hpp"
#include "rfvar/experiment.hpp"
#include "rfvar/forest.hpp"
#include "rfvar/ij_variance.hpp"
#include "rfvar/manifest.hpp"
#include "rfvar/model_io.hpp"
#include "rfvar/random.hpp"
#include "rfvar/report.hpp"
#include "rfvar/resampling.hpp"
#include "rfvar/simgen.hpp"
#include "rfvar/tree.hpp"
#include "rfvar/tree_builder.hpp"

#endif  // RFVAR_RFVAR_HPP
