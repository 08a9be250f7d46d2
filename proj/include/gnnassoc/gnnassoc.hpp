/*
 * Copyright 2026 The gnnassoc Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include "gnnassoc/ad/adam.hpp"
#include "gnnassoc/ad/checkpoint.hpp"
#include "gnnassoc/ad/mlp.hpp"
#include "gnnassoc/ad/ops.hpp"
#include "gnnassoc/ad/tape.hpp"
#include "gnnassoc/ad/tensor.hpp"
#include "gnnassoc/baselines.hpp"
#include "gnnassoc/config.hpp"
#include "gnnassoc/expcli.hpp"
#include "gnnassoc/gnn.hpp"
#include "gnnassoc/phy.hpp"
#include "gnnassoc/reparam.hpp"
#include "gnnassoc/rng.hpp"
#include "gnnassoc/scenario.hpp"
#include "gnnassoc/train.hpp"
