#pragma once

// Everything except the HTTP client, which pulls in cpp-httplib.

#include "chartforge/answer_parsing.hpp"
#include "chartforge/chart_model.hpp"
#include "chartforge/common.hpp"
#include "chartforge/curation.hpp"
#include "chartforge/gen_client.hpp"
#include "chartforge/prompts.hpp"
#include "chartforge/qa_engine.hpp"
#include "chartforge/random.hpp"
#include "chartforge/renderer.hpp"
#include "chartforge/response_eval.hpp"
#include "chartforge/reward_engine.hpp"
