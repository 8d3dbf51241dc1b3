#ifndef BCTS_BCTS_HPP
#define BCTS_BCTS_HPP

#include "bcts/bench.hpp"
#include "bcts/bias.hpp"
#include "bcts/common.hpp"
#include "bcts/env.hpp"
#include "bcts/envs.hpp"
#include "bcts/normal.hpp"
#include "bcts/search.hpp"
#include "bcts/theory_lab.hpp"
#include "bcts/trainer.hpp"
#include "bcts/value_fn.hpp"

#endif  // BCTS_BCTS_HPP
