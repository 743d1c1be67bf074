// Copyright 2026 The rotdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "rotdet/attention_targets.hpp"
#include "rotdet/batch.hpp"
#include "rotdet/box_coding.hpp"
#include "rotdet/dota_io.hpp"
#include "rotdet/error.hpp"
#include "rotdet/evaluation.hpp"
#include "rotdet/geometry.hpp"
#include "rotdet/grid.hpp"
#include "rotdet/losses.hpp"
#include "rotdet/postprocess.hpp"
#include "rotdet/sampling.hpp"
