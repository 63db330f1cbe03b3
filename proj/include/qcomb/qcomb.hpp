// Copyright 2026 The qcomb Authors
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

#ifndef QCOMB_QCOMB_HPP
#define QCOMB_QCOMB_HPP

#include "qcomb/analyze.hpp"
#include "qcomb/config.hpp"
#include "qcomb/errors.hpp"
#include "qcomb/ingest.hpp"
#include "qcomb/io.hpp"
#include "qcomb/model.hpp"
#include "qcomb/parallel.hpp"
#include "qcomb/protocol.hpp"
#include "qcomb/qops.hpp"
#include "qcomb/random.hpp"
#include "qcomb/reconstruct.hpp"

#endif  // QCOMB_QCOMB_HPP
