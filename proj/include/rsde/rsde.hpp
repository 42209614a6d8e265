#pragma once

#include "rsde/analysis.hpp"
#include "rsde/core.hpp"
#include "rsde/driver.hpp"
#include "rsde/flow.hpp"
#include "rsde/geometry.hpp"
#include "rsde/rng.hpp"
#include "rsde/schemes.hpp"
#include "rsde/skorokhod.hpp"
