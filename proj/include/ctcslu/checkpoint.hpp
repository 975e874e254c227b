// Copyright (c) 2026 The ctcslu Authors.
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

#pragma once

#include <string>

#include "ctcslu/nn.hpp"

namespace ctcslu {

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Binary checkpoint layout, bit-exact:
//   magic "SLUC", version byte 0x01, then per entry (store iteration order):
//   u32 LE name length, UTF-8 name, u32 LE rank, u32 LE dims, f64 LE values.
void save_checkpoint(const ParamStore& store, const std::string& path);

/// Loads values into an existing store; names, order and dims must match.
void load_checkpoint(ParamStore& store, const std::string& path);

}  // namespace ctcslu
