#pragma once

#include "esnmf/corpus.hpp"
#include "esnmf/error.hpp"
#include "esnmf/eval.hpp"
#include "esnmf/io.hpp"
#include "esnmf/matrix_market.hpp"
#include "esnmf/nmf.hpp"
#include "esnmf/random.hpp"
#include "esnmf/small_dense.hpp"
#include "esnmf/sparse_matrix.hpp"
#include "esnmf/sparse_ops.hpp"
#include "esnmf/sweep.hpp"
