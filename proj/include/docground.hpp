// Copyright 2026 The docground Authors.
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

// Umbrella header.

#include "docground/answer_parser.hpp"
#include "docground/checkpoint.hpp"
#include "docground/dataset.hpp"
#include "docground/embeddings.hpp"
#include "docground/errors.hpp"
#include "docground/geometry.hpp"
#include "docground/harness.hpp"
#include "docground/ocr_locator.hpp"
#include "docground/prompting.hpp"
#include "docground/regressor.hpp"
#include "docground/report.hpp"
#include "docground/text_metrics.hpp"
#include "docground/vlm_client.hpp"
