#pragma once

#include "e2rank/config.hpp"
#include "e2rank/data_io.hpp"
#include "e2rank/encoder.hpp"
#include "e2rank/error.hpp"
#include "e2rank/index.hpp"
#include "e2rank/labels.hpp"
#include "e2rank/linalg.hpp"
#include "e2rank/losses.hpp"
#include "e2rank/metrics.hpp"
#include "e2rank/parallel.hpp"
#include "e2rank/prompts.hpp"
#include "e2rank/reranker.hpp"
#include "e2rank/rng.hpp"
#include "e2rank/synthetic.hpp"
#include "e2rank/tokenizer.hpp"
#include "e2rank/trainer.hpp"
