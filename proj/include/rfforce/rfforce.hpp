#pragma once

#include "rfforce/angles.hpp"
#include "rfforce/casestudy.hpp"
#include "rfforce/design.hpp"
#include "rfforce/errors.hpp"
#include "rfforce/estimator.hpp"
#include "rfforce/format.hpp"
#include "rfforce/interp.hpp"
#include "rfforce/link_sim.hpp"
#include "rfforce/scenario.hpp"
#include "rfforce/sensor.hpp"
#include "rfforce/trace_io.hpp"
#include "rfforce/transduction.hpp"
