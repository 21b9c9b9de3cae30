// Copyright 2026 The Calibre Authors
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

#pragma once

#include "calibre/error.hpp"
#include "calibre/io.hpp"
#include "calibre/rng.hpp"

#include "calibre/textcore/bio.hpp"
#include "calibre/textcore/conll.hpp"
#include "calibre/textcore/mrc_json.hpp"
#include "calibre/textcore/pbr_jsonl.hpp"
#include "calibre/textcore/span.hpp"
#include "calibre/textcore/tokenize.hpp"

#include "calibre/corpus/passages.hpp"
#include "calibre/corpus/wikitext.hpp"

#include "calibre/synth/noise.hpp"
#include "calibre/synth/pbr.hpp"
#include "calibre/synth/question.hpp"

#include "calibre/pairing/consistency.hpp"
#include "calibre/pairing/match.hpp"

#include "calibre/schedule/stages.hpp"

#include "calibre/model/base_tagger.hpp"
#include "calibre/model/calibrator.hpp"
#include "calibre/model/checkpoint.hpp"
#include "calibre/model/config.hpp"
#include "calibre/model/train.hpp"
#include "calibre/model/vocab.hpp"

#include "calibre/eval/metrics.hpp"
#include "calibre/eval/oracle.hpp"
#include "calibre/eval/taxonomy.hpp"
