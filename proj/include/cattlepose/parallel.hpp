// Copyright 2026 The cattlepose Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <functional>

namespace cattlepose {

// Worker count used by the heavy kernels. Defaults to FSMC_THREADS when set,
// otherwise 1.
int num_threads();
void set_num_threads(int n);

// Runs fn(i) for i in [begin, end), split into contiguous chunks across
// num_threads() workers. Each index is handled by exactly one worker, so any
// kernel that writes disjoint outputs per index stays bit-identical regardless
// of the thread count.
void parallel_for(int64_t begin, int64_t end, const std::function<void(int64_t)>& fn);

}  // namespace cattlepose
