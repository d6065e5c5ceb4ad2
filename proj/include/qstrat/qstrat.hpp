#pragma once

#include "qstrat/core.hpp"
#include "qstrat/covering.hpp"
#include "qstrat/density.hpp"
#include "qstrat/energy.hpp"
#include "qstrat/example_fields.hpp"
#include "qstrat/fields.hpp"
#include "qstrat/flow.hpp"
#include "qstrat/homogeneity.hpp"
#include "qstrat/kernels.hpp"
#include "qstrat/means.hpp"
#include "qstrat/quadrature.hpp"
