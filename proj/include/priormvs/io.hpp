#pragma once

#include "priormvs/io/cam.hpp"
#include "priormvs/io/image.hpp"
#include "priormvs/io/layout.hpp"
#include "priormvs/io/pair.hpp"
#include "priormvs/io/pfm.hpp"
#include "priormvs/io/ply.hpp"
#include "priormvs/io/text.hpp"
