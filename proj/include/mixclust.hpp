// Copyright 2026 The mixclust Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "mixclust/adam.hpp"
#include "mixclust/checkpoint.hpp"
#include "mixclust/clustering.hpp"
#include "mixclust/config.hpp"
#include "mixclust/dc_loss.hpp"
#include "mixclust/dsp.hpp"
#include "mixclust/error.hpp"
#include "mixclust/eval.hpp"
#include "mixclust/features.hpp"
#include "mixclust/masks.hpp"
#include "mixclust/network.hpp"
#include "mixclust/parallel.hpp"
#include "mixclust/pipeline.hpp"
#include "mixclust/rng.hpp"
#include "mixclust/separation.hpp"
#include "mixclust/spatial_sim.hpp"
#include "mixclust/train.hpp"
#include "mixclust/train_config.hpp"
#include "mixclust/wav.hpp"
