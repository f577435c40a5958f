#pragma once

#include "ocdgalp/error.hpp"
#include "ocdgalp/eval.hpp"
#include "ocdgalp/experiment.hpp"
#include "ocdgalp/gat.hpp"
#include "ocdgalp/graph.hpp"
#include "ocdgalp/io.hpp"
#include "ocdgalp/lpa.hpp"
#include "ocdgalp/matrix.hpp"
#include "ocdgalp/pipeline.hpp"
#include "ocdgalp/synth.hpp"
#include "ocdgalp/timeline.hpp"
