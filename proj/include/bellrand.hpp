#pragma once

#include "bellrand/error.hpp"
#include "bellrand/bits.hpp"
#include "bellrand/events.hpp"
#include "bellrand/synth.hpp"
#include "bellrand/series.hpp"
#include "bellrand/complexity.hpp"
#include "bellrand/special.hpp"
#include "bellrand/battery.hpp"
#include "bellrand/stationarity.hpp"
#include "bellrand/nonlinear.hpp"
#include "bellrand/toeplitz.hpp"
#include "bellrand/io.hpp"
#include "bellrand/report.hpp"
