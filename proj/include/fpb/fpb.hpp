#pragma once

#include "fpb/config.hpp"
#include "fpb/contour.hpp"
#include "fpb/dataset.hpp"
#include "fpb/error.hpp"
#include "fpb/eval_maze.hpp"
#include "fpb/eval_tangram.hpp"
#include "fpb/frame_io.hpp"
#include "fpb/geom.hpp"
#include "fpb/harness.hpp"
#include "fpb/icons.hpp"
#include "fpb/image.hpp"
#include "fpb/manifest.hpp"
#include "fpb/maze.hpp"
#include "fpb/maze_gen.hpp"
#include "fpb/parallel.hpp"
#include "fpb/perturb.hpp"
#include "fpb/pieces.hpp"
#include "fpb/raster.hpp"
#include "fpb/report.hpp"
#include "fpb/rng.hpp"
#include "fpb/schedule.hpp"
#include "fpb/sweep.hpp"
#include "fpb/tangram.hpp"
#include "fpb/tangram_gen.hpp"
