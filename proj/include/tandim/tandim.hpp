#pragma once

#include "tandim/errors.hpp"
#include "tandim/metric_space.hpp"
#include "tandim/counting.hpp"
#include "tandim/gromov_hausdorff.hpp"
#include "tandim/schedule.hpp"
#include "tandim/cells.hpp"
#include "tandim/counterexample.hpp"
#include "tandim/gfunction.hpp"
#include "tandim/quasicocycle.hpp"
#include "tandim/dimensions.hpp"
#include "tandim/tangent.hpp"
#include "tandim/report_io.hpp"
#include "tandim/suites.hpp"
