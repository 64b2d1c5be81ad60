#pragma once

#include "factpipe/claim.hpp"
#include "factpipe/credibility.hpp"
#include "factpipe/errors.hpp"
#include "factpipe/evaluation.hpp"
#include "factpipe/evidence.hpp"
#include "factpipe/fetch.hpp"
#include "factpipe/ingestion.hpp"
#include "factpipe/json_util.hpp"
#include "factpipe/llm.hpp"
#include "factpipe/orchestrator.hpp"
#include "factpipe/prompts.hpp"
#include "factpipe/query_gen.hpp"
#include "factpipe/search.hpp"
#include "factpipe/util.hpp"
#include "factpipe/verdict.hpp"
