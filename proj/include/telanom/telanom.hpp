#pragma once

#include "telanom/common.hpp"
#include "telanom/csv.hpp"
#include "telanom/trip_store.hpp"
#include "telanom/trip_prep.hpp"
#include "telanom/anomaly/mahalanobis.hpp"
#include "telanom/anomaly/lof.hpp"
#include "telanom/anomaly/iforest.hpp"
#include "telanom/profiling.hpp"
#include "telanom/tabular_prep.hpp"
#include "telanom/enet_glm.hpp"
#include "telanom/eval_tune.hpp"
#include "telanom/synthgen.hpp"
#include "telanom/commands.hpp"
