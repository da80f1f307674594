#pragma once

#include "priormvs/correction.hpp"
#include "priormvs/error.hpp"
#include "priormvs/fusion.hpp"
#include "priormvs/geometry.hpp"
#include "priormvs/io.hpp"
#include "priormvs/kdtree.hpp"
#include "priormvs/metrics.hpp"
#include "priormvs/mvs.hpp"
#include "priormvs/prior.hpp"
#include "priormvs/random.hpp"
#include "priormvs/raster.hpp"
#include "priormvs/scene.hpp"
#include "priormvs/synthesis.hpp"
