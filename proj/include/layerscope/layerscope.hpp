#pragma once

#include "layerscope/clustering.hpp"
#include "layerscope/corpus.hpp"
#include "layerscope/error.hpp"
#include "layerscope/filter.hpp"
#include "layerscope/flow_layout.hpp"
#include "layerscope/matrix.hpp"
#include "layerscope/metrics.hpp"
#include "layerscope/projection.hpp"
#include "layerscope/seriation.hpp"
#include "layerscope/session.hpp"
#include "layerscope/summaries.hpp"
