#pragma once

#include "mentor/analytics.hpp"
#include "mentor/config.hpp"
#include "mentor/error.hpp"
#include "mentor/grpo.hpp"
#include "mentor/normalize.hpp"
#include "mentor/orchestrator.hpp"
#include "mentor/plot.hpp"
#include "mentor/reward.hpp"
#include "mentor/sandbox.hpp"
#include "mentor/search.hpp"
#include "mentor/service.hpp"
#include "mentor/toy_env.hpp"
#include "mentor/trainer.hpp"
#include "mentor/trajectory.hpp"
#include "mentor/trajectory_log.hpp"
