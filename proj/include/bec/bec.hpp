#pragma once

#include "bec/analytic.hpp"
#include "bec/centering.hpp"
#include "bec/config.hpp"
#include "bec/csv.hpp"
#include "bec/environments.hpp"
#include "bec/errors.hpp"
#include "bec/harness.hpp"
#include "bec/learners.hpp"
#include "bec/mdp.hpp"
#include "bec/report.hpp"
#include "bec/rng.hpp"
#include "bec/schedule.hpp"
#include "bec/stationary.hpp"
