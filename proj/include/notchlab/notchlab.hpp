#pragma once

#include "notchlab/core.hpp"
#include "notchlab/mtl.hpp"
#include "notchlab/equiv.hpp"
#include "notchlab/purcell.hpp"
#include "notchlab/mux.hpp"
#include "notchlab/specfit.hpp"
#include "notchlab/metrics.hpp"
#include "notchlab/io.hpp"
