#pragma once

#include "urysohn/metric_domain.hpp"
#include "urysohn/holder.hpp"
#include "urysohn/test_functions.hpp"
#include "urysohn/quadrature.hpp"
#include "urysohn/kernels.hpp"
#include "urysohn/operators.hpp"
#include "urysohn/verification.hpp"
#include "urysohn/ide.hpp"
