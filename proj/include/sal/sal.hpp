#pragma once

#include "sal/analysis.hpp"
#include "sal/data.hpp"
#include "sal/error.hpp"
#include "sal/landscape.hpp"
#include "sal/nn.hpp"
#include "sal/optimizers.hpp"
#include "sal/parameter_set.hpp"
#include "sal/perturbation.hpp"
#include "sal/rng.hpp"
#include "sal/sal_wrapper.hpp"
#include "sal/stress.hpp"
#include "sal/harness/checkpoint.hpp"
#include "sal/harness/compare.hpp"
#include "sal/harness/config.hpp"
#include "sal/harness/figures.hpp"
#include "sal/harness/format.hpp"
#include "sal/harness/run.hpp"
#include "sal/harness/sweep.hpp"
#include "sal/harness/task.hpp"
#include "sal/harness/theory.hpp"
