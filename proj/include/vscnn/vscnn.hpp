/* Copyright 2026 The VSCNN Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include "vscnn/conv.hpp"
#include "vscnn/error.hpp"
#include "vscnn/experiment.hpp"
#include "vscnn/mapping.hpp"
#include "vscnn/metrics.hpp"
#include "vscnn/pe_sim.hpp"
#include "vscnn/rng.hpp"
#include "vscnn/sparse.hpp"
#include "vscnn/sparse_io.hpp"
#include "vscnn/tensor.hpp"
#include "vscnn/tensor_io.hpp"
