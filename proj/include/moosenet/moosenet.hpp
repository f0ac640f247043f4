// moosenet/moosenet.hpp

// Copyright 2026 The MooseNet Authors
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

#include "moosenet/augment.hpp"
#include "moosenet/batching.hpp"
#include "moosenet/binning.hpp"
#include "moosenet/config.hpp"
#include "moosenet/dataset.hpp"
#include "moosenet/error.hpp"
#include "moosenet/gradcheck.hpp"
#include "moosenet/head.hpp"
#include "moosenet/losses.hpp"
#include "moosenet/metrics.hpp"
#include "moosenet/optim.hpp"
#include "moosenet/plda.hpp"
#include "moosenet/train.hpp"
