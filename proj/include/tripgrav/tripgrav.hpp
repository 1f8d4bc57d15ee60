#pragma once

#include "tripgrav/analysis.hpp"
#include "tripgrav/boosting.hpp"
#include "tripgrav/core.hpp"
#include "tripgrav/csv.hpp"
#include "tripgrav/error.hpp"
#include "tripgrav/forest.hpp"
#include "tripgrav/gravity.hpp"
#include "tripgrav/importance.hpp"
#include "tripgrav/ingestion.hpp"
#include "tripgrav/metrics.hpp"
#include "tripgrav/mlp.hpp"
#include "tripgrav/model.hpp"
#include "tripgrav/parallel.hpp"
#include "tripgrav/report.hpp"
#include "tripgrav/rng.hpp"
#include "tripgrav/serialize.hpp"
#include "tripgrav/synth.hpp"
#include "tripgrav/tree.hpp"
#include "tripgrav/tuning.hpp"
