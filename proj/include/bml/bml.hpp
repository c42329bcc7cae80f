#pragma once

// Pairwise (bivariate marginal) likelihood estimation for spatial error
// regression on coded neighbor pairs.

#include "bml/coding.hpp"
#include "bml/dataset.hpp"
#include "bml/distributions.hpp"
#include "bml/error.hpp"
#include "bml/estimator.hpp"
#include "bml/graph.hpp"
#include "bml/inference.hpp"
#include "bml/likelihood.hpp"
#include "bml/resample.hpp"
#include "bml/rng.hpp"
#include "bml/simulate.hpp"
#include "bml/theta.hpp"
