#pragma once

#include "otdet/error.hpp"
#include "otdet/rng.hpp"
#include "otdet/csv.hpp"
#include "otdet/config.hpp"
#include "otdet/lp.hpp"
#include "otdet/ot_core.hpp"
#include "otdet/lin_sys.hpp"
#include "otdet/wcd.hpp"
#include "otdet/detector.hpp"
#include "otdet/bench.hpp"
