#pragma once
// Umbrella header.

#include "gmdp/auxiva.hpp"
#include "gmdp/core.hpp"
#include "gmdp/metrics.hpp"
#include "gmdp/pipeline.hpp"
#include "gmdp/scaling.hpp"
#include "gmdp/simulate.hpp"
#include "gmdp/stft.hpp"
#include "gmdp/wav.hpp"
