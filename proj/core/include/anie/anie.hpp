#pragma once

#include "anie/affinity.hpp"
#include "anie/anomaly.hpp"
#include "anie/baselines.hpp"
#include "anie/basis.hpp"
#include "anie/coeffs.hpp"
#include "anie/error.hpp"
#include "anie/events.hpp"
#include "anie/io.hpp"
#include "anie/model.hpp"
#include "anie/pipeline.hpp"
#include "anie/subspace.hpp"
#include "anie/synth.hpp"
