// Copyright 2026 The nplm Authors
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

#include "nplm/binary_io.hpp"
#include "nplm/bm25.hpp"
#include "nplm/config.hpp"
#include "nplm/corpus.hpp"
#include "nplm/datastore.hpp"
#include "nplm/distribution.hpp"
#include "nplm/document.hpp"
#include "nplm/encoder.hpp"
#include "nplm/error.hpp"
#include "nplm/evaluation.hpp"
#include "nplm/flat_index.hpp"
#include "nplm/index_io.hpp"
#include "nplm/ivfpq_index.hpp"
#include "nplm/kmeans.hpp"
#include "nplm/kneser_ney.hpp"
#include "nplm/knn_lm.hpp"
#include "nplm/license.hpp"
#include "nplm/random.hpp"
#include "nplm/report.hpp"
#include "nplm/ric_lm.hpp"
#include "nplm/stopwords.hpp"
#include "nplm/synthetic.hpp"
#include "nplm/tokenizer.hpp"
#include "nplm/tombstones.hpp"
#include "nplm/topk.hpp"
#include "nplm/vector_index.hpp"
#include "nplm/vocabulary.hpp"
