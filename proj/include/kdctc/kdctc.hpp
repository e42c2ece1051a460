// Copyright 2026 The kdctc Authors. All Rights Reserved.
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

#ifndef KDCTC_KDCTC_HPP
#define KDCTC_KDCTC_HPP

#include "kdctc/corpus/corpus.hpp"
#include "kdctc/ctc/alphabet.hpp"
#include "kdctc/ctc/ctc_loss.hpp"
#include "kdctc/ctc/posterior.hpp"
#include "kdctc/decode/decode.hpp"
#include "kdctc/distill/distill.hpp"
#include "kdctc/frontend/audio.hpp"
#include "kdctc/frontend/features.hpp"
#include "kdctc/io/container.hpp"
#include "kdctc/model/arch.hpp"
#include "kdctc/model/checkpoint.hpp"
#include "kdctc/model/lstm.hpp"
#include "kdctc/model/network.hpp"
#include "kdctc/model/params.hpp"
#include "kdctc/numcore/errors.hpp"
#include "kdctc/numcore/gradcheck.hpp"
#include "kdctc/numcore/math.hpp"
#include "kdctc/numcore/rng.hpp"
#include "kdctc/numcore/tensor.hpp"
#include "kdctc/pipeline/adam.hpp"
#include "kdctc/pipeline/dataset.hpp"
#include "kdctc/pipeline/evaluate.hpp"
#include "kdctc/pipeline/plan.hpp"
#include "kdctc/pipeline/report.hpp"
#include "kdctc/pipeline/runner.hpp"
#include "kdctc/pipeline/train.hpp"

#endif  // KDCTC_KDCTC_HPP
