/*
 * Copyright 2026 The mrfir Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef MRFIR_MRFIR_HPP
#define MRFIR_MRFIR_HPP

#include "mrfir/error.hpp"
#include "mrfir/signals.hpp"
#include "mrfir/regressor.hpp"
#include "mrfir/kernels.hpp"
#include "mrfir/estimator.hpp"
#include "mrfir/tuning.hpp"
#include "mrfir/sim.hpp"

#endif
