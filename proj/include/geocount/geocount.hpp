#pragma once

#include "geocount/analytics.hpp"
#include "geocount/annotation.hpp"
#include "geocount/backend.hpp"
#include "geocount/classes.hpp"
#include "geocount/commands.hpp"
#include "geocount/config.hpp"
#include "geocount/detection.hpp"
#include "geocount/detector.hpp"
#include "geocount/error.hpp"
#include "geocount/evaluation.hpp"
#include "geocount/geo.hpp"
#include "geocount/image_io.hpp"
#include "geocount/jsonl.hpp"
#include "geocount/merge.hpp"
#include "geocount/osm.hpp"
#include "geocount/raster.hpp"
#include "geocount/synth.hpp"
#include "geocount/tiler.hpp"
