#pragma once

#include "nslab/errors.hpp"
#include "nslab/rng.hpp"
#include "nslab/spiral.hpp"
#include "nslab/individual.hpp"
#include "nslab/archive.hpp"
#include "nslab/ns_core.hpp"
#include "nslab/analysis.hpp"
#include "nslab/experiment.hpp"
#include "nslab/io.hpp"
#include "nslab/batch.hpp"
