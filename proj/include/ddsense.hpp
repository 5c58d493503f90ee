#pragma once

#include "ddsense/analytic.hpp"
#include "ddsense/dsl.hpp"
#include "ddsense/engine.hpp"
#include "ddsense/errors.hpp"
#include "ddsense/parallel.hpp"
#include "ddsense/robustness.hpp"
#include "ddsense/scenario.hpp"
#include "ddsense/sequence.hpp"
#include "ddsense/spectrum.hpp"
#include "ddsense/spinsys.hpp"
