#pragma once

#include "nlpaft/errors.hpp"
#include "nlpaft/normal.hpp"
#include "nlpaft/dataset.hpp"
#include "nlpaft/newton.hpp"
#include "nlpaft/aft.hpp"
#include "nlpaft/priors.hpp"
#include "nlpaft/bayes_select.hpp"
#include "nlpaft/screening.hpp"
#include "nlpaft/driver.hpp"
#include "nlpaft/simgen.hpp"
#include "nlpaft/bench.hpp"
#include "nlpaft/io.hpp"
