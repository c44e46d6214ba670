#pragma once

#include "salvage/amat.hpp"
#include "salvage/cluster.hpp"
#include "salvage/config.hpp"
#include "salvage/core.hpp"
#include "salvage/curves.hpp"
#include "salvage/link.hpp"
#include "salvage/manifest.hpp"
#include "salvage/sim.hpp"
#include "salvage/splitplan.hpp"
#include "salvage/utility.hpp"
