/*
   Copyright 2026 The steinrule Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include "steinrule/analysis.hpp"
#include "steinrule/distributions.hpp"
#include "steinrule/errors.hpp"
#include "steinrule/linalg.hpp"
#include "steinrule/model.hpp"
#include "steinrule/parallel.hpp"
#include "steinrule/risk.hpp"
#include "steinrule/rng.hpp"
#include "steinrule/shrinkage.hpp"
#include "steinrule/simulation.hpp"
#include "steinrule/verification.hpp"
