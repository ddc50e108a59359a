#pragma once

#include "dcmpr/degree_model.hpp"
#include "dcmpr/errors.hpp"
#include "dcmpr/experiments.hpp"
#include "dcmpr/graph_builder.hpp"
#include "dcmpr/io.hpp"
#include "dcmpr/multidigraph.hpp"
#include "dcmpr/pagerank.hpp"
#include "dcmpr/presets.hpp"
#include "dcmpr/random.hpp"
#include "dcmpr/tbt.hpp"
