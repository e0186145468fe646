#pragma once

#include "appearance.hpp"
#include "common.hpp"
#include "flow.hpp"
#include "image.hpp"
#include "motion.hpp"
#include "partition.hpp"
#include "pipeline.hpp"
#include "synth.hpp"
#include "videoio.hpp"
