// Copyright 2026 The Isochron Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ISOCHRON_COMMON_THREADS_H_
#define ISOCHRON_COMMON_THREADS_H_

#include <cstddef>
#include <functional>

namespace isochron {

// Worker count used by parallel_for: ISOCHRON_THREADS if set (>=1),
// otherwise hardware concurrency.
size_t worker_count();

// Runs fn(i) for i in [0, n). Work items must write disjoint output slots;
// each item is independent, so results do not depend on the thread count.
// Items are dispatched in index order when worker_count() == 1.
void parallel_for(size_t n, const std::function<void(size_t)>& fn);

}  // namespace isochron

#endif  // ISOCHRON_COMMON_THREADS_H_
