#pragma once

#include "usimrank/accel.hpp"
#include "usimrank/bitvector.hpp"
#include "usimrank/error.hpp"
#include "usimrank/graph.hpp"
#include "usimrank/random.hpp"
#include "usimrank/report.hpp"
#include "usimrank/sampling.hpp"
#include "usimrank/simrank.hpp"
#include "usimrank/trans_matrix.hpp"
#include "usimrank/trans_pr.hpp"
#include "usimrank/walk_file.hpp"
#include "usimrank/walk_prob.hpp"
