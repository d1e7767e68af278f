#pragma once

#include "resflow/checkpoint.hpp"
#include "resflow/dataset.hpp"
#include "resflow/error.hpp"
#include "resflow/evaluation.hpp"
#include "resflow/flo_io.hpp"
#include "resflow/flow.hpp"
#include "resflow/flow_field.hpp"
#include "resflow/frames.hpp"
#include "resflow/grid.hpp"
#include "resflow/metrics.hpp"
#include "resflow/model.hpp"
#include "resflow/parallel.hpp"
#include "resflow/pipeline.hpp"
#include "resflow/png_io.hpp"
#include "resflow/residual.hpp"
#include "resflow/serialization.hpp"
#include "resflow/training.hpp"
