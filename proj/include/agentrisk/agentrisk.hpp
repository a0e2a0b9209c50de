#pragma once

#include "agentrisk/cheb_bounds.hpp"
#include "agentrisk/distributions.hpp"
#include "agentrisk/dubins.hpp"
#include "agentrisk/error.hpp"
#include "agentrisk/frames.hpp"
#include "agentrisk/mc_oracle.hpp"
#include "agentrisk/poly.hpp"
#include "agentrisk/qfmvg.hpp"
#include "agentrisk/random.hpp"
#include "agentrisk/report.hpp"
#include "agentrisk/risk_engine.hpp"
#include "agentrisk/scenario.hpp"
#include "agentrisk/sdp.hpp"
#include "agentrisk/sos_bound.hpp"
#include "agentrisk/treering.hpp"
