#pragma once

#include "nnet/scalar.hpp"
#include "nnet/error.hpp"
#include "nnet/dissimilarity.hpp"
#include "nnet/split.hpp"
#include "nnet/ordering.hpp"
#include "nnet/counting.hpp"
#include "nnet/block_state.hpp"
#include "nnet/agglomerate.hpp"
#include "nnet/length.hpp"
#include "nnet/kalmanson.hpp"
#include "nnet/weights.hpp"
#include "nnet/tsp.hpp"
#include "nnet/io.hpp"
