#pragma once

#include "fairtab/core/adam.hpp"
#include "fairtab/core/gradient_check.hpp"
#include "fairtab/core/matrix.hpp"
#include "fairtab/core/mlp.hpp"
#include "fairtab/core/rng.hpp"
#include "fairtab/data/csv.hpp"
#include "fairtab/data/dataset.hpp"
#include "fairtab/data/io.hpp"
#include "fairtab/data/pipeline.hpp"
#include "fairtab/data/preprocess.hpp"
#include "fairtab/data/schema.hpp"
#include "fairtab/data/split.hpp"
#include "fairtab/data/synthetic.hpp"
#include "fairtab/error.hpp"
#include "fairtab/experiment.hpp"
#include "fairtab/log.hpp"
#include "fairtab/losses.hpp"
#include "fairtab/metrics.hpp"
#include "fairtab/sampler.hpp"
#include "fairtab/theory/checks.hpp"
#include "fairtab/theory/finite_joint.hpp"
#include "fairtab/theory/pair_law.hpp"
#include "fairtab/theory/plan.hpp"
#include "fairtab/theory/random_laws.hpp"
#include "fairtab/trainer.hpp"
