// Copyright 2026 The MomentKit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MOMENTKIT_RANDOM_H_
#define MOMENTKIT_RANDOM_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace momentkit {

using Rng = std::mt19937_64;

// FNV-1a. Stable across platforms and runs, unlike std::hash.
uint64_t Fnv1a64(std::string_view bytes);

// An independent stream for `key` under a global seed. Results drawn from the
// stream depend only on (seed, key), never on the order streams are created.
Rng MakeStream(uint64_t seed, std::string_view key);

}  // namespace momentkit

#endif  // MOMENTKIT_RANDOM_H_
