#pragma once

#include "fbp/analysis.hpp"
#include "fbp/binning.hpp"
#include "fbp/error.hpp"
#include "fbp/estimator.hpp"
#include "fbp/io.hpp"
#include "fbp/kernels.hpp"
#include "fbp/lbfgs.hpp"
#include "fbp/objectives.hpp"
#include "fbp/special_functions.hpp"
#include "fbp/synthetic.hpp"
#include "fbp/warp.hpp"
