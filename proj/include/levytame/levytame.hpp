#pragma once

#include "levytame/errors.hpp"
#include "levytame/grid.hpp"
#include "levytame/harness.hpp"
#include "levytame/linalg.hpp"
#include "levytame/markov.hpp"
#include "levytame/model.hpp"
#include "levytame/parallel.hpp"
#include "levytame/presets.hpp"
#include "levytame/rng.hpp"
#include "levytame/scheme.hpp"
#include "levytame/stats.hpp"
#include "levytame/taming.hpp"
#include "levytame/verify.hpp"
