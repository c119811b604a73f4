#pragma once

#include "symptomrank/config.hpp"
#include "symptomrank/corpus.hpp"
#include "symptomrank/dataset.hpp"
#include "symptomrank/error.hpp"
#include "symptomrank/eval.hpp"
#include "symptomrank/io.hpp"
#include "symptomrank/oracle.hpp"
#include "symptomrank/oracle_http.hpp"
#include "symptomrank/pipeline.hpp"
#include "symptomrank/questionnaire.hpp"
#include "symptomrank/runs.hpp"
#include "symptomrank/score_table.hpp"
#include "symptomrank/similarity.hpp"
#include "symptomrank/text.hpp"
#include "symptomrank/types.hpp"
