#pragma once

#include "irtmpc/benchmark.hpp"
#include "irtmpc/controller.hpp"
#include "irtmpc/errors.hpp"
#include "irtmpc/linalg.hpp"
#include "irtmpc/model.hpp"
#include "irtmpc/setcalc.hpp"
#include "irtmpc/sim.hpp"
#include "irtmpc/solver.hpp"
#include "irtmpc/synthesis.hpp"

namespace irtmpc {
inline constexpr const char* kVersion = "0.1.0";
}
