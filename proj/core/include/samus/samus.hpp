#pragma once

#include "samus/astro.hpp"
#include "samus/constants.hpp"
#include "samus/dbscan.hpp"
#include "samus/errors.hpp"
#include "samus/gating.hpp"
#include "samus/harness.hpp"
#include "samus/hypotheses.hpp"
#include "samus/maneuver.hpp"
#include "samus/motion_model.hpp"
#include "samus/observer.hpp"
#include "samus/rng.hpp"
#include "samus/roe.hpp"
#include "samus/scoring.hpp"
#include "samus/sim.hpp"
#include "samus/tracker.hpp"
