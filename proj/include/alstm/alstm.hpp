#pragma once

#include "alstm/approx.hpp"
#include "alstm/bleu.hpp"
#include "alstm/error.hpp"
#include "alstm/eval.hpp"
#include "alstm/io.hpp"
#include "alstm/lstm.hpp"
#include "alstm/perf_model.hpp"
#include "alstm/random.hpp"
#include "alstm/report.hpp"
#include "alstm/svd.hpp"
#include "alstm/tensor.hpp"
