#ifndef TANAG_TANAG_HPP
#define TANAG_TANAG_HPP

#include "tanag/baselines.hpp"
#include "tanag/config.hpp"
#include "tanag/dynamics.hpp"
#include "tanag/experiment.hpp"
#include "tanag/hyperparams.hpp"
#include "tanag/network.hpp"
#include "tanag/problem.hpp"
#include "tanag/runtime.hpp"

#endif  // TANAG_TANAG_HPP
