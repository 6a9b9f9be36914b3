// Umbrella header for the mastery-testing library.

#ifndef CMT_CMT_HPP
#define CMT_CMT_HPP

#include "cmt/bisection.hpp"
#include "cmt/boundary.hpp"
#include "cmt/calibration.hpp"
#include "cmt/irt_model.hpp"
#include "cmt/item_pool_io.hpp"
#include "cmt/item_selection.hpp"
#include "cmt/parallel.hpp"
#include "cmt/random.hpp"
#include "cmt/report.hpp"
#include "cmt/sim_engine.hpp"
#include "cmt/stopping_rules.hpp"

#endif  // CMT_CMT_HPP
